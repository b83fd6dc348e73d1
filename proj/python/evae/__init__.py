"""VAE training with an evolutionary KL-weight controller."""

from ._evae import (
    ConfigError,
    IntegrityError,
    NumericError,
    PidController,
    SpecificationError,
    UsageError,
    VgaDriver,
    bernoulli_recon_loss,
    cost_anneal_beta,
    crossover,
    cyclical_beta,
    fitness,
    generate_dataset,
    git_blob_hash,
    kl_per_dim,
    mutate_with,
    render_sprite,
    run,
    sample_rc,
)

__all__ = [
    "ConfigError",
    "IntegrityError",
    "NumericError",
    "PidController",
    "SpecificationError",
    "UsageError",
    "VgaDriver",
    "bernoulli_recon_loss",
    "cost_anneal_beta",
    "crossover",
    "cyclical_beta",
    "fitness",
    "generate_dataset",
    "git_blob_hash",
    "kl_per_dim",
    "mutate_with",
    "render_sprite",
    "run",
    "sample_rc",
]
