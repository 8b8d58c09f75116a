"""Command line front end, CSV ingestion and report serialization."""
