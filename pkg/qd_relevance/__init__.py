"""qd-relevance scores query-document relevance by ensembling
a generative labeler and an embedding classifier."""
