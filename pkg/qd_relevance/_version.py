QD_RELEVANCE_VERSION = '0.1.0'
