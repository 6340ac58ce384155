"""End-to-end pipeline: configuration, fitting, scoring, persistence.

A fitted pipeline bundles the representation model, the feature ranking and
selection, and the boosted classifier into one self-describing JSON document
with a semantic format version. Serialization is canonical (sorted keys,
repr-exact floats), so save -> load -> save is byte-identical and fixed-seed
refits produce byte-identical files.

One master seed is expanded into per-stage seeds by hashing the stage name
(SHA-256 of ``"<seed>:<stage>"``), so adding a stage never perturbs the
randomness of earlier ones.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .datasets import REAL, ImageSet, make_labeled_split
from .dft import DftRanking, FeatureSelection, rank_features, select_features
from .errors import GeometryError, VersionError
from .evaluate import EvaluationReport, aggregate_report
from .gbdt import BoostedEnsemble, GbdtParams, fit_ensemble
from .saab import SaabModel, build_representation, fit_representation

MODEL_VERSION = "1.0.0"


def derive_seed(master: int, stage: str) -> int:
    """Stable per-stage seed from the master seed and the stage name."""
    digest = hashlib.sha256(f"{master}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def imageset_fingerprint(images: ImageSet) -> str:
    """SHA-256 over shape, provenance and raw pixel bytes."""
    h = hashlib.sha256()
    h.update(repr(images.pixels.shape).encode())
    h.update(images.provenance.encode())
    h.update(np.ascontiguousarray(images.pixels, dtype="<f4").tobytes())
    return h.hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the pipeline; defaults match the 28x28 grayscale setup."""

    patch_size: int = 5
    stride: int = 2
    channels: int | None = None
    energy_threshold: float = 0.99
    k1: int | None = None
    cw_k: int | None = None
    num_bins: int = 32
    select_mode: str = "top_k"
    top_k: int = 400
    threshold: float = 0.5
    histogram_bins: int = 50
    test_fraction: float = 0.2
    real_fraction: float = 1.0
    seed: int = 0
    gbdt: GbdtParams = field(default_factory=GbdtParams)

    def validate(self):
        if self.patch_size < 1 or self.stride < 1:
            raise ValueError("patch_size and stride must be >= 1")
        if self.channels not in (None, 1, 3):
            raise ValueError("channels must be 1, 3 or unset")
        if not 0.0 < self.energy_threshold <= 1.0:
            raise ValueError("energy_threshold must lie in (0, 1]")
        if self.select_mode not in ("top_k", "elbow"):
            raise ValueError(f"unknown selection mode {self.select_mode!r}")
        if self.num_bins < 2:
            raise ValueError("num_bins must be >= 2")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if not 0.0 < self.real_fraction <= 1.0:
            raise ValueError("real_fraction must lie in (0, 1]")
        self.gbdt.validate()

    def to_dict(self) -> dict:
        doc = {
            "patch_size": self.patch_size,
            "stride": self.stride,
            "channels": self.channels,
            "energy_threshold": self.energy_threshold,
            "k1": self.k1,
            "cw_k": self.cw_k,
            "num_bins": self.num_bins,
            "select_mode": self.select_mode,
            "top_k": self.top_k,
            "threshold": self.threshold,
            "histogram_bins": self.histogram_bins,
            "test_fraction": self.test_fraction,
            "real_fraction": self.real_fraction,
            "seed": self.seed,
        }
        doc.update({f"gbdt_{k}": v for k, v in self.gbdt.to_dict().items()})
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        gbdt_kwargs = {k[5:]: v for k, v in doc.items() if k.startswith("gbdt_")}
        plain = {k: v for k, v in doc.items() if not k.startswith("gbdt_")}
        return cls(gbdt=GbdtParams(**gbdt_kwargs), **plain)


_CONFIG_TYPES = None


def _config_field_types() -> dict:
    global _CONFIG_TYPES
    if _CONFIG_TYPES is None:
        defaults = RunConfig().to_dict()
        _CONFIG_TYPES = {k: type(v) for k, v in defaults.items() if v is not None}
        _CONFIG_TYPES.update({"channels": int, "k1": int, "cw_k": int})
    return _CONFIG_TYPES


def parse_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment; 'none' clears a field."""
    types = _config_field_types()
    out: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            if value.lower() == "none":
                out[key] = None
            elif types[key] is str:
                out[key] = value
            else:
                out[key] = types[key](value)
    return out


def write_config_file(config: RunConfig, path) -> None:
    with open(path, "w") as fh:
        for key, value in config.to_dict().items():
            fh.write(f"{key}={'none' if value is None else value}\n")


def _saab_to_dict(model: SaabModel) -> dict:
    doc = {
        "dc_kernel": model.dc_kernel.tolist(),
        "ac_kernels": model.ac_kernels.tolist(),
        "eigenvalues": model.eigenvalues.tolist(),
        "patch_mean": model.patch_mean.tolist(),
        "input_side": model.input_side,
        "channels": model.channels,
        "patch_size": model.patch_size,
        "stride": model.stride,
        "energy_threshold": model.energy_threshold,
        "explicit_channels": model.explicit_channels,
    }
    if model.cw_models is not None:
        doc["cw_models"] = [_saab_to_dict(sub) for sub in model.cw_models]
    return doc


def _saab_from_dict(doc: dict) -> SaabModel:
    cw = doc.get("cw_models")
    dim = len(doc["dc_kernel"])
    return SaabModel(
        dc_kernel=np.asarray(doc["dc_kernel"], dtype=np.float64),
        ac_kernels=np.asarray(doc["ac_kernels"], dtype=np.float64).reshape(-1, dim),
        eigenvalues=np.asarray(doc["eigenvalues"], dtype=np.float64),
        patch_mean=np.asarray(doc["patch_mean"], dtype=np.float64),
        input_side=doc["input_side"],
        channels=doc["channels"],
        patch_size=doc["patch_size"],
        stride=doc["stride"],
        energy_threshold=doc["energy_threshold"],
        explicit_channels=doc["explicit_channels"],
        cw_models=tuple(_saab_from_dict(sub) for sub in cw) if cw is not None else None,
    )


@dataclass(eq=False)
class PipelineModel:
    """A fully fitted pipeline plus the record of how it was trained."""

    saab: SaabModel
    ranking: DftRanking
    selection: FeatureSelection
    ensemble: BoostedEnsemble
    config: RunConfig
    training: dict
    version: str = MODEL_VERSION

    def representation_width(self) -> int:
        return self.ranking.dimension

    def score_images(self, images: ImageSet) -> np.ndarray:
        """Soft score per image; near 0 means realistic, near 1 detectable."""
        features = build_representation(images, self.saab)
        return self.ensemble.predict_score(features.data[:, self.selection.indices])

    def evaluate(
        self,
        real: ImageSet,
        generated: ImageSet,
        threshold: float | None = None,
        bins: int | None = None,
        metadata: dict | None = None,
    ) -> EvaluationReport:
        scores = np.concatenate([self.score_images(real), self.score_images(generated)])
        labels = np.concatenate([np.zeros(real.count, dtype=np.int8), np.ones(generated.count, dtype=np.int8)])
        meta = {"config": self.config.to_dict(), "entropy_base": "e"}
        meta.update(metadata or {})
        return aggregate_report(
            scores,
            labels,
            threshold if threshold is not None else self.config.threshold,
            bins if bins is not None else self.config.histogram_bins,
            metadata=meta,
        )

    def to_dict(self) -> dict:
        return {
            "format_version": self.version,
            "config": self.config.to_dict(),
            "saab": _saab_to_dict(self.saab),
            "dft": {
                "losses": self.ranking.losses.tolist(),
                "thresholds": self.ranking.thresholds.tolist(),
                "f_min": self.ranking.f_min.tolist(),
                "f_max": self.ranking.f_max.tolist(),
                "num_bins": self.ranking.num_bins,
                "entropy_base": "e",
            },
            "selection": {
                "mode": self.selection.mode,
                "k": self.selection.k,
                "elbow_index": self.selection.elbow_index,
                "indices": [int(i) for i in self.selection.indices],
            },
            "ensemble": self.ensemble.to_dict(),
            "training": self.training,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineModel":
        version = doc.get("format_version", "")
        if version.split(".")[0] != MODEL_VERSION.split(".")[0]:
            raise VersionError(f"unsupported model format version {version!r}")
        losses = np.asarray(doc["dft"]["losses"], dtype=np.float64)
        ranking = DftRanking(
            losses=losses,
            thresholds=np.asarray(doc["dft"]["thresholds"], dtype=np.float64),
            f_min=np.asarray(doc["dft"]["f_min"], dtype=np.float64),
            f_max=np.asarray(doc["dft"]["f_max"], dtype=np.float64),
            order=np.argsort(losses, kind="stable"),
            num_bins=doc["dft"]["num_bins"],
        )
        selection = FeatureSelection(
            indices=np.asarray(doc["selection"]["indices"], dtype=np.int64),
            mode=doc["selection"]["mode"],
            k=doc["selection"]["k"],
            elbow_index=doc["selection"]["elbow_index"],
        )
        model = cls(
            saab=_saab_from_dict(doc["saab"]),
            ranking=ranking,
            selection=selection,
            ensemble=BoostedEnsemble.from_dict(doc["ensemble"]),
            config=RunConfig.from_dict(doc["config"]),
            training=doc["training"],
            version=version,
        )
        model._check_consistency()
        return model

    def _check_consistency(self):
        width = self.ranking.dimension
        if self.selection.indices.size and (
            self.selection.indices.min() < 0 or self.selection.indices.max() >= width
        ):
            raise GeometryError("selection indices fall outside the representation width")
        if self.ensemble.n_features != self.selection.indices.size:
            raise GeometryError(
                f"ensemble expects {self.ensemble.n_features} features, selection has {self.selection.indices.size}"
            )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "PipelineModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_pipeline(real: ImageSet, generated: ImageSet, config: RunConfig) -> tuple["PipelineModel", dict]:
    """Split, learn the representation, rank/select features, train the
    classifier. Returns the model and a dict of per-stage wall-clock seconds
    (kept out of the model file so artifacts stay byte-reproducible)."""
    config.validate()
    if real.side != generated.side or real.channels != generated.channels:
        raise GeometryError("real and generated sources must share geometry")
    if config.channels is not None and real.channels != config.channels:
        raise GeometryError(f"config expects {config.channels} channels, data has {real.channels}")

    timings: dict[str, float] = {}
    tick = time.perf_counter()
    split = make_labeled_split(
        real,
        generated,
        test_fraction=config.test_fraction,
        real_fraction=config.real_fraction,
        seed=derive_seed(config.seed, "split"),
    )
    train_pixels, train_labels = split.train_union()
    train_images = ImageSet(train_pixels, REAL)
    timings["split"] = time.perf_counter() - tick

    tick = time.perf_counter()
    saab = fit_representation(
        train_images,
        patch_size=config.patch_size,
        stride=config.stride,
        energy_threshold=config.energy_threshold,
        explicit_channels=config.k1,
        cw_explicit_channels=config.cw_k,
    )
    features = build_representation(train_images, saab)
    timings["representation"] = time.perf_counter() - tick

    tick = time.perf_counter()
    ranking = rank_features(features.data, train_labels, num_bins=config.num_bins)
    selection = select_features(
        ranking,
        mode=config.select_mode,
        k=config.top_k if config.select_mode == "top_k" else None,
    )
    timings["dft"] = time.perf_counter() - tick

    tick = time.perf_counter()
    gbdt_params = replace(config.gbdt, seed=derive_seed(config.seed, "gbdt"))
    ensemble = fit_ensemble(features.data[:, selection.indices], train_labels, gbdt_params)
    timings["gbdt"] = time.perf_counter() - tick

    train_scores = ensemble.predict_score(features.data[:, selection.indices])
    train_correct = int(np.sum((train_scores >= config.threshold) == (train_labels == 1)))
    training = {
        "fingerprints": {"real": imageset_fingerprint(real), "generated": imageset_fingerprint(generated)},
        "split": {
            "seed": derive_seed(config.seed, "split"),
            "test_fraction": config.test_fraction,
            "real_fraction": config.real_fraction,
        },
        "representation_width": features.width,
        "selected_count": int(selection.indices.size),
        "train_counts": {"real": split.train_real.count, "generated": split.train_generated.count},
        "train_accuracy": train_correct / train_labels.size,
        "final_train_loss": ensemble.train_loss[-1] if ensemble.train_loss else None,
    }
    model = PipelineModel(
        saab=saab,
        ranking=ranking,
        selection=selection,
        ensemble=ensemble,
        config=config,
        training=training,
    )
    return model, timings


def holdout_split(model: PipelineModel, real: ImageSet, generated: ImageSet):
    """Recompute the deterministic train/test split recorded in the model."""
    rec = model.training["split"]
    return make_labeled_split(
        real,
        generated,
        test_fraction=rec["test_fraction"],
        real_fraction=rec["real_fraction"],
        seed=rec["seed"],
    )


def matches_training_data(model: PipelineModel, real: ImageSet, generated: ImageSet) -> bool:
    prints = model.training["fingerprints"]
    return (
        imageset_fingerprint(real) == prints["real"]
        and imageset_fingerprint(generated) == prints["generated"]
    )
