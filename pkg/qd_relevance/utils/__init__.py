"""qd-relevance utils"""
