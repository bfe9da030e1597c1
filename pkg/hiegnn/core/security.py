"""
Optional bearer-token protection of the inference API.

When `API_TOKEN` is unset every request is accepted.
"""

import secrets
from typing import Optional

from fastapi import HTTPException, Security, status
from fastapi.security import HTTPAuthorizationCredentials, HTTPBearer

from hiegnn.core.config import settings

security = HTTPBearer(auto_error=False)


async def require_token(
    credentials: Optional[HTTPAuthorizationCredentials] = Security(security)
) -> None:
    """
    Dependency checking the `Authorization: Bearer <token>` header against
    `settings.API_TOKEN`.

    Raises:
        HTTPException: 401 if a token is configured and the request lacks
            it or carries a different one
    """
    expected = settings.API_TOKEN
    if not expected:
        return
    if credentials is None:
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="Missing bearer token",
            headers={"WWW-Authenticate": "Bearer"},
        )
    if not secrets.compare_digest(credentials.credentials, expected):
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="Invalid authentication token",
            headers={"WWW-Authenticate": "Bearer"},
        )
