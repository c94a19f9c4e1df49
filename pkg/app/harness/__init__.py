# Harness package
from app.harness.checkpoint import read_checkpoint, write_checkpoint
from app.harness.config import config_hash, load_scenario, scenario_from_mapping
from app.harness.csv_writer import emit_csv, read_csv, render_csv
from app.harness.oracle_check import run_oracle_checks
from app.harness.scenario import build_initial_state, build_relaxed_state, classify_preparation
from app.harness.sweep import SweepRunner, run_sweep
