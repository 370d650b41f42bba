"""MCP tools exposing risk landscapes and network summaries."""
