"""
Shared plumbing for the pipeline subcommands.
"""
import argparse
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from core.exceptions import PreconditionError
from core.services.files import atomic_write_bytes, atomic_write_text
from ingest.models import SplitSpec

logger = logging.getLogger(__name__)


def split_spec(value):
    """``--split train,test,validation`` as a SplitSpec."""
    try:
        fractions = [float(part) for part in value.split(',')]
    except ValueError:
        fractions = []
    if len(fractions) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated fractions, got {value!r}")
    try:
        return SplitSpec(*fractions)
    except PreconditionError as exc:
        raise argparse.ArgumentTypeError(str(exc))


class PipelineCommand(BaseCommand):
    """
    A subcommand that computes everything first and publishes its output
    files last, each through an atomic rename.
    """
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=settings.DEFAULT_SEED,
                            help='Seed threaded through every random draw.')
        parser.add_argument('--config', dest='config_file', default=None,
                            help='key=value file with flag overrides (flags win).')
        parser.add_argument('--out', dest='out', required=True,
                            help='Output directory.')
        self.add_pipeline_arguments(parser)

    def add_pipeline_arguments(self, parser):
        pass

    def publish(self, out_dir, files):
        """
        Write ``{relative name: str | bytes}`` under ``out_dir``.
        """
        out_dir = Path(out_dir)
        for name in sorted(files):
            content = files[name]
            if isinstance(content, bytes):
                atomic_write_bytes(out_dir / name, content)
            else:
                atomic_write_text(out_dir / name, content)
        logger.info(f"Published {len(files)} files to {out_dir}")
        return [out_dir / name for name in sorted(files)]
