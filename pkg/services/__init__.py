"""Services package for the split sampling benchmark."""
