"""Paragraph-level generic news frame detection.

Pipeline pieces: the frame codebook and label rules, corpus ingestion and
dataset persistence, human annotation with inter-coder agreement, encoder
fine-tuning, metric/cross-validation evaluation, and a CLI plus HTTP
service tying them together.
"""

__version__ = "0.1.0"
