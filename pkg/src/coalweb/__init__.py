"""Brownian-web laboratory: coalescing walk webs, skeletons and path-space metrics."""
