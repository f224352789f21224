"""Keyphrase-aware document retrieval and evaluation toolkit.

Indexes title/abstract/keyword fields of scientific abstracts, optionally
expands documents with predicted keyphrases, ranks with BM25 or query
likelihood (with RM3 feedback), extracts keyphrases with a multipartite
graph ranker, and evaluates runs (MAP, P@10, F1@k, paired t-test,
present/absent and domain splits).
"""

__version__ = "0.1.0"
