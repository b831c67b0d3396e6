import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from common.schemas import UavSpec


class ChannelParams(BaseModel):
    """Параметры радиоканала: сегментированная log-distance модель с затенением"""

    model_config = ConfigDict(frozen=True)

    alpha_los: float = Field(default=-22.0, description="LoS path loss slope, dB per decade")
    beta_los: float = Field(default=-42.0, description="LoS gain at d0 = 1 m, dB")
    sigma_los: float = Field(default=2.0, ge=0, description="LoS shadowing std, dB")
    alpha_nlos: float = Field(default=-36.0, description="NLoS path loss slope, dB per decade")
    beta_nlos: float = Field(default=-48.0, description="NLoS gain at d0 = 1 m, dB")
    sigma_nlos: float = Field(default=5.0, ge=0, description="NLoS shadowing std, dB")
    tx_power_w: float = Field(default=1.0, gt=0, description="Transmit power P, W")
    noise_power_w: float = Field(default=1e-9, gt=0, description="Receiver noise power, W")
    snr_threshold: float = Field(default=0.05, ge=0, description="Linear SNR link threshold")


class EnvConfig(BaseModel):
    """Настройки симулятора"""

    dt: float = Field(default=1.0, gt=0, description="Time slot duration")
    log_all_pairs: bool = Field(default=False, description="Log measurements for unreachable links too")


class LearnerConfig(BaseModel):
    """Настройки QMIX / IQL"""

    mode: Literal["qmix", "iql"] = Field(default="qmix")
    gamma: float = Field(default=0.99, ge=0, le=1, description="Discount factor")
    batch_size: int = Field(default=32, ge=1, description="Episodes per train step (B)")
    target_update_period: int = Field(default=200, ge=1, description="Train calls between target syncs")
    epsilon_start: float = Field(default=1.0, ge=0, le=1)
    epsilon_end: float = Field(default=0.05, ge=0, le=1)
    epsilon_decay_steps: int = Field(default=50_000, ge=1, description="Env steps of linear decay")
    hidden_dim: int = Field(default=64, ge=1)
    embed_dim: int = Field(default=32, ge=1)
    hypernet_dim: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=5e-4, gt=0)
    adam_beta1: float = Field(default=0.9, ge=0, lt=1)
    adam_beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    grad_norm_clip: float | None = Field(default=10.0, description="None disables clipping")
    buffer_capacity: int = Field(default=5000, ge=1, description="Replay capacity in episodes")


class FedConfig(BaseModel):
    """Настройки внешнего цикла model-aided FedQMIX"""

    learners: int = Field(default=3, ge=1, description="Federated learner count (I)")
    n_freq: int = Field(default=50, ge=1, description="Episodes between aggregations")
    episodes_per_iteration: int = Field(default=1000, ge=1, description="Simulated episodes per outer iteration (N)")
    e_max: int = Field(default=30, ge=1, description="Real-world episodes")
    learner_seeds: list[int] | None = Field(default=None, description="Explicit per-learner seeds")
    real_world_epsilon: float = Field(default=0.0, ge=0, le=1)
    reset_buffers: bool = Field(default=False, description="Clear replay buffers every outer iteration")
    concurrent: bool = Field(default=True, description="Run learners in worker threads")
    baseline_episodes: int | None = Field(
        default=None, ge=1, description="Real-world training episodes of the qmix/iql baselines (default e_max * N)"
    )

    @model_validator(mode="after")
    def _check_seeds(self) -> "FedConfig":
        if self.learner_seeds is not None and len(self.learner_seeds) != self.learners:
            raise ValueError("fed.learner_seeds must have one seed per learner")
        return self


class PsoConfig(BaseModel):
    """Настройки роя частиц для локализации"""

    particles: int = Field(default=50, ge=2)
    iterations: int = Field(default=100, ge=0)
    inertia: float = Field(default=0.72)
    c1: float = Field(default=1.49, description="Cognitive coefficient")
    c2: float = Field(default=1.49, description="Social coefficient")
    velocity_clamp: float = Field(default=0.2, gt=0, description="Fraction of the search bounds")
    seed: int = Field(default=0)
    grid_seed: bool = Field(default=True, description="Seed one particle at the best cell centre")


class EnvLearnConfig(BaseModel):
    """Настройки обучения модели среды"""

    model: Literal["loglinear", "mlp"] = Field(default="loglinear")
    min_samples: int = Field(default=50, ge=2, description="Anchor measurements needed to fit")
    min_measurements: int = Field(default=10, ge=1, description="Measurements needed to localize")
    sigma_floor_db: float = Field(default=0.01, gt=0, description="Lower bound of sigma in the NLL")
    mlp_hidden: int = Field(default=32, ge=1)
    mlp_epochs: int = Field(default=400, ge=1)
    mlp_learning_rate: float = Field(default=1e-2, gt=0)
    prior: ChannelParams = Field(
        default_factory=lambda: ChannelParams(
            alpha_los=-20.0, beta_los=-40.0, sigma_los=3.0,
            alpha_nlos=-30.0, beta_nlos=-50.0, sigma_nlos=6.0,
        ),
        description="Channel guess used before enough anchor measurements exist",
    )


class LoggingConfig(BaseModel):
    """Настройки логирования"""

    level: str = Field(default="INFO")
    format: str = Field(default="%(asctime)s %(levelname)-5.5s [%(name)s] %(message)s")


class Config(BaseSettings):
    """Главная конфигурация эксперимента с автоматической загрузкой из .env"""

    model_config = SettingsConfigDict(
        env_prefix='FEDQMIX_',
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=False,
        extra='ignore',
        env_nested_delimiter='__'
    )

    # Сценарий
    map: str = Field(default="builtin:rbm", description="Map JSON path or builtin:<name>")
    uavs: list[UavSpec] | None = Field(default=None, description="Overrides the map's UAV list")
    seed: int = Field(default=0)
    out_dir: Path = Field(default=Path("runs/default"))
    source_dir: Path | None = Field(default=None, exclude=True)

    # Группы настроек
    channel: ChannelParams = Field(default_factory=ChannelParams)
    env: EnvConfig = Field(default_factory=EnvConfig)
    learner: LearnerConfig = Field(default_factory=LearnerConfig)
    fed: FedConfig = Field(default_factory=FedConfig)
    pso: PsoConfig = Field(default_factory=PsoConfig)
    envlearn: EnvLearnConfig = Field(default_factory=EnvLearnConfig)
    log: LoggingConfig = Field(default_factory=LoggingConfig)

    @model_validator(mode="after")
    def _check_uavs(self) -> "Config":
        if self.uavs is not None:
            altitudes = [u.altitude_m for u in self.uavs]
            if len(set(altitudes)) != len(altitudes):
                raise ValueError("uavs.altitude_m must be pairwise distinct")
            ids = [u.id for u in self.uavs]
            if len(set(ids)) != len(ids):
                raise ValueError("uavs.id must be unique")
        return self

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "Config":
        """
        Загрузка конфига эксперимента из JSON.

        Отсутствующие в файле ключи берутся из FEDQMIX_* переменных окружения.
        """
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        data.update(overrides)
        data["source_dir"] = path.parent
        return cls(**data)

    def resolve_path(self, value: str | Path) -> Path:
        """Относительные пути считаются от директории конфига."""
        p = Path(value)
        if not p.is_absolute() and self.source_dir is not None:
            p = self.source_dir / p
        return p


# Создаём синглтон конфига
config = Config()
