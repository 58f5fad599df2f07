import logging
import sys
from pathlib import Path

from rich.console import Console
from rich.table import Table

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.config.engine_config import EngineConfig  # noqa: E402
from src.services.desk_evaluation import mean_processed_lsd, score_scenes  # noqa: E402

logs_dir = Path("logs")
logs_dir.mkdir(exist_ok=True)

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler('logs/desk_evaluation.log', encoding='utf-8'),
        logging.StreamHandler(sys.stdout)
    ]
)
logger = logging.getLogger(__name__)

SEEDS = range(5)


def scene_table(scores) -> Table:
    table = Table(title="Integrated method, T60 0.68 s, DRR 0 dB")
    table.add_column("Utterance", style="cyan")
    table.add_column("LSD reverb", justify="right")
    table.add_column("LSD out", justify="right", style="green")
    table.add_column("CD reverb", justify="right")
    table.add_column("CD out", justify="right", style="green")
    table.add_column("Improved", justify="center")
    for s in scores:
        table.add_row(
            str(s.seed),
            f"{s.reverberant.lsd_db:.2f}",
            f"{s.processed.lsd_db:.2f}",
            f"{s.reverberant.cd:.2f}",
            f"{s.processed.cd:.2f}",
            "yes" if s.improved else "no",
        )
    return table


def main() -> int:
    console = Console()
    scores = score_scenes(SEEDS)
    console.print(scene_table(scores))
    improved = sum(s.improved for s in scores)
    console.print(f"Improved on {improved} of {len(scores)} utterances")

    settings_table = Table(title="Parameter behaviour (mean output LSD, dB)")
    settings_table.add_column("Setting", style="cyan")
    settings_table.add_column("LSD", justify="right")
    for label, config in [
        ("p=1, 64 ms", EngineConfig()),
        ("p=2, 64 ms", EngineConfig(power_p=2)),
        ("p=1, 16 ms", EngineConfig(frame_ms=16.0)),
    ]:
        settings_table.add_row(label, f"{mean_processed_lsd(score_scenes(SEEDS, config)):.2f}")
    console.print(settings_table)
    return 0 if improved >= 4 else 1


if __name__ == "__main__":
    sys.exit(main())
