from contextlib import contextmanager
from typing import Any

from opentelemetry import trace

TRACER_NAME = "conebreak"


@contextmanager
def command_span(command: str, **attributes: Any):
    """Run a CLI command inside a span; no exporter is configured here."""
    tracer = trace.get_tracer(TRACER_NAME)
    with tracer.start_as_current_span(f"conebreak.{command}") as span:
        span.set_attribute("conebreak.command", command)
        for key, value in attributes.items():
            if value is not None:
                span.set_attribute(f"conebreak.{key}", value)
        yield span
