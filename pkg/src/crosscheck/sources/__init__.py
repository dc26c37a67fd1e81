"""Dataset sources: synthetic generators, IDX files and client partitioning."""
