"""Joint surgical gesture recognition and action-based progress estimation.

Toolkit for training recurrent multi-task models on robot kinematics:
JIGSAWS-format ingestion and preprocessing, automatic progress-stage
labeling from gesture transcripts, a from-scratch (Bi)LSTM with exact
backpropagation through time, gradient-norm loss balancing, segmental
evaluation metrics, and a leave-one-user-out experiment harness.
"""

__version__ = "0.1.0"
