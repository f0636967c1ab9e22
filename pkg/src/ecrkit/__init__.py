"""Cross-document event coreference toolkit.

Corpus ingestion, discourse-windowed mention pairing, trigger-similarity
bias analysis, LLM-in-the-loop counterfactual data augmentation, pluggable
pairwise scoring, greedy clustering and the full coreference evaluation
suite (MUC, B-cubed, CEAF_e, LEA, CoNLL).
"""

__version__ = "0.1.0"
