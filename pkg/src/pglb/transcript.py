"""Per-round run records, counters and the privacy ledger.

Every algorithm (private or baseline) emits the same schema so reports
and reduction-identity checks can compare transcripts directly. Floats
are serialized with repr (17 significant digits) so a written transcript
replays bit-for-bit.
"""

import csv
import hashlib
import io
from dataclasses import dataclass, field


CSV_COLUMNS = (
    "round",
    "context_hash",
    "arm_index",
    "reward",
    "instant_regret",
    "cumulative_regret",
    "explore_flag",
    "switch_flag",
)


def context_hash(arms):
    return hashlib.sha1(arms.tobytes()).hexdigest()[:12]


@dataclass
class LedgerEntry:
    """One mechanism's privacy spend.

    share_num/share_den record the budget split as an exact fraction of
    the configured (eps, delta) so audits can sum shares without float
    drift; eps/delta carry the realized numeric values. Channels other
    than the calibrated one mark the entry non-private.
    """

    mechanism: str
    eps: float
    delta: float
    share_num: int
    share_den: int
    rounds: str
    channel: str = "calibrated"
    detail: str = ""

    @property
    def private(self):
        return self.channel == "calibrated"


@dataclass
class RegretTranscript:
    algorithm: str
    seed: int
    rows: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    ledger: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    _cum: float = 0.0

    def record_round(self, t, arms, arm_index, reward, instant_regret,
                     explore=False, switch=False):
        if instant_regret < 0:
            self.bump("negative_regret_violations")
        self._cum += instant_regret
        self.rows.append(
            (
                t,
                context_hash(arms),
                int(arm_index),
                float(reward),
                float(instant_regret),
                self._cum,
                int(explore),
                int(switch),
            )
        )

    def bump(self, counter, amount=1):
        self.counters[counter] = self.counters.get(counter, 0) + amount

    def set_counter(self, counter, value):
        self.counters[counter] = value

    def add_ledger(self, entry):
        self.ledger.append(entry)

    @property
    def cumulative_regret(self):
        return self.rows[-1][5] if self.rows else 0.0

    def rows_csv(self):
        """Transcript rows as CSV text; identical runs give identical bytes."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.rows:
            writer.writerow(
                [
                    row[0],
                    row[1],
                    row[2],
                    repr(row[3]),
                    repr(row[4]),
                    repr(row[5]),
                    row[6],
                    row[7],
                ]
            )
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.rows_csv())

    def violation_counters(self):
        return {k: v for k, v in self.counters.items() if k.endswith("_violations")}


def read_rows_csv(path):
    """Round-trip loader for transcript CSVs."""
    rows = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected transcript columns: {header}")
        for rec in reader:
            rows.append(
                (
                    int(rec[0]),
                    rec[1],
                    int(rec[2]),
                    float(rec[3]),
                    float(rec[4]),
                    float(rec[5]),
                    int(rec[6]),
                    int(rec[7]),
                )
            )
    return rows
