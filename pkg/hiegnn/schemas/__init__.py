"""Pydantic schemas: corpus records, configs, reports and API payloads."""
