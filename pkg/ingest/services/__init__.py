"""
Dataset ingestion services: CSV loading and saving, splitting and
collection from a Bitcoin node.
"""
