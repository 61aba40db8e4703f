"""Configuration management for the split sampling benchmark."""

import math
from typing import Optional
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings."""

    # Application
    app_name: str = "splitsampling"
    app_version: str = "1.0.0"
    app_description: str = "Split sampling for rare events and evidence, with multilevel baselines"

    # Runtime
    workers: int = 1
    output_dir: str = "./results"
    include_timing: bool = False  # wall clock in JSON reports breaks byte-identical reruns
    batch_chunk_size: int = 262_144

    # Logging
    log_level: str = "INFO"

    # Split sampling
    default_rho: float = math.exp(-1.0)
    default_n_level: int = 10_000
    default_nu_init: float = 10_000.0
    rare_event_boost: float = 0.1
    evidence_boost: float = 10.0
    default_beta: Optional[float] = None
    default_t_max: int = 100
    default_kernel_steps: int = 1
    tail_tolerance: float = 1e-4
    negligible_increment: float = 1e-16
    level_budget_factor: int = 100  # iterations allowed per level, in units of N_level
    estimation_share: float = 0.5  # share of a total budget held back for estimation
    min_level_visits: int = 100  # top-level visits a level needs before its budget quota can close it
    trace_every: int = 100

    # Adaptive weights
    rebalance_cap: float = 2.0
    fh_tolerance: float = 0.05
    fh_step_scale: float = 1.0
    fh_step_decay: float = 0.65
    adaptation_interval: int = 10_000

    # Cross-entropy
    ce_rho: float = 0.1
    ce_pilot_size: int = 1_000
    ce_max_stages: int = 100
    ce_smoothing: float = 1.0
    ce_min_effective_sample_size: float = 10.0

    # Product estimator (multilevel splitting)
    cpp_stage_size: Optional[int] = None  # None: budget split evenly over expected stages

    # Nested sampling
    ns_particles: int = 1_000
    ns_mcmc_steps: int = 100
    ns_epsilon: float = 1e-6
    ns_patience: int = 1_000
    ns_max_iterations: int = 50_000_000

    # Diffuse nested sampling
    dns_kappa: float = 0.1
    dns_level_interval: int = 1_000
    dns_max_levels: int = 100
    dns_mass_pseudocount: float = 100.0

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "env_prefix": "SPLITSAMPLING_",
        "extra": "ignore",
        "protected_namespaces": ()
    }


# Global settings instance
settings = Settings()
