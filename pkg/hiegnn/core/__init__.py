"""Core functionality: settings, database, errors, HTTP middleware and security."""
