"""
Level ablation grid: one-level, two-level and full three-level runs that
differ only in their level weights.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from hiegnn.core.exceptions import ConfigError
from hiegnn.schemas.config import HieGnnConfig, TrainConfig
from hiegnn.schemas.corpus import Corpus
from hiegnn.schemas.reports import AblationReport, AblationRow, TrainReport
from hiegnn.services.hiegnn_model import HieGnnModel
from hiegnn.services.trainer import train

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationSetting:
    name: str
    description: str
    levels: Tuple[str, ...]
    fixed: Optional[Tuple[float, float, float]] = None

    def apply(self, config: TrainConfig) -> TrainConfig:
        if self.fixed is not None:
            return config.model_copy(update={"lambda_override": self.fixed, "active_levels": None})
        if len(self.levels) == 3:
            return config.model_copy(update={"lambda_override": None, "active_levels": None})
        return config.model_copy(update={"lambda_override": None, "active_levels": self.levels})


ABLATION_GRID: Dict[str, AblationSetting] = {
    s.name: s
    for s in (
        AblationSetting("d_only", "λ_d = 1, λ_s,w = 0", ("d",), (1.0, 0.0, 0.0)),
        AblationSetting("s_only", "λ_s = 1, λ_d,w = 0", ("s",), (0.0, 1.0, 0.0)),
        AblationSetting("w_only", "λ_w = 1, λ_d,s = 0", ("w",), (0.0, 0.0, 1.0)),
        AblationSetting("no_d", "λ_d = 0, λ_s,w ≠ 0", ("s", "w")),
        AblationSetting("no_s", "λ_s = 0, λ_d,w ≠ 0", ("d", "w")),
        AblationSetting("no_w", "λ_w = 0, λ_d,s ≠ 0", ("d", "s")),
        AblationSetting("hiegat", "HieGAT (λ_d,s,w ≠ 0)", ("d", "s", "w")),
    )
}


def select_rows(names: Optional[Sequence[str]]) -> List[AblationSetting]:
    if not names:
        return list(ABLATION_GRID.values())
    unknown = [name for name in names if name not in ABLATION_GRID]
    if unknown:
        raise ConfigError(f"unknown ablation rows {unknown}; valid rows: {', '.join(ABLATION_GRID)}")
    return [ABLATION_GRID[name] for name in names]


def run_ablation_grid(corpus: Corpus, model_config: HieGnnConfig, train_config: TrainConfig,
                      rows: Optional[Sequence[str]] = None, progress: bool = False,
                      on_row: Optional[Callable[[AblationSetting, TrainReport], None]] = None
                      ) -> AblationReport:
    """
    Train one fresh model per ablation setting from the same seed and
    collect test accuracies. The best row(s) are flagged.
    """
    results = []
    for setting in select_rows(rows):
        logger.info(f"Ablation row {setting.name}: {setting.description}")
        model = HieGnnModel(model_config)
        report = train(model, corpus, setting.apply(train_config), progress=progress)
        if on_row is not None:
            on_row(setting, report)
        results.append(AblationRow(
            name=setting.name,
            description=setting.description,
            levels=setting.levels,
            fixed=setting.fixed,
            test_accuracy=report.test_accuracy or 0.0,
            best_epoch=report.best_epoch,
        ))

    best = max(row.test_accuracy for row in results)
    for row in results:
        row.is_best = row.test_accuracy == best
    return AblationReport(corpus=corpus.name or "corpus", rows=results, seed=train_config.seed)
