from diveq.harness.autoencoder import MLP, Autoencoder, AutoencoderArchitecture, activations
from diveq.harness.autoencoder_trainer import AutoencoderTrainer, train_autoencoder
from diveq.harness.base import BaseTrainer, TrainerState
from diveq.harness.clustering import fit_residual_codebooks, kmeans_plusplus_init, lloyd
from diveq.harness.codebook_trainer import CodebookTrainer, train_codebook_direct
from diveq.harness.evaluation import evaluate_autoencoder, evaluate_codebook
from diveq.harness.initialization import init_codebook_vectors, sf_delayed_init
from diveq.harness.optimizers import SGD, Adam, Optimizer, optimizers
from diveq.harness.schedules import TrainingSchedule, anneal_tau, learning_rate_at
