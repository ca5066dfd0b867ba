import pytest
from benchmark import write_config
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter

from conebreak.cli.main import main
from conebreak.exceptions import DomainError
from conebreak.tracing import command_span


class TestOpentracing:
    def setup_method(self):
        self.exporter = InMemorySpanExporter()
        self.provider = TracerProvider()
        self.provider.add_span_processor(SimpleSpanProcessor(self.exporter))

    def test_command_span(self, mocker):
        mocker.patch("conebreak.tracing.trace.get_tracer", self.provider.get_tracer)

        with command_span("radial", config_hash="abc", seed=3, missing=None):
            pass

        (span,) = self.exporter.get_finished_spans()
        assert span.name == "conebreak.radial"
        assert span.attributes["conebreak.command"] == "radial"
        assert span.attributes["conebreak.config_hash"] == "abc"
        assert span.attributes["conebreak.seed"] == 3
        assert "conebreak.missing" not in span.attributes

    def test_span_records_errors(self, mocker):
        mocker.patch("conebreak.tracing.trace.get_tracer", self.provider.get_tracer)

        with pytest.raises(DomainError), command_span("stability"):
            raise DomainError(detail="boom")

        (span,) = self.exporter.get_finished_spans()
        assert not span.status.is_ok
        assert span.events[0].name == "exception"

    def test_cli_runs_inside_span(self, mocker, tmp_path):
        mocker.patch("conebreak.tracing.trace.get_tracer", self.provider.get_tracer)
        config = write_config(tmp_path)

        code = main(["tmprobe", "--config", str(config), "--out", str(tmp_path / "out"), "--seed", "9"])

        (span,) = self.exporter.get_finished_spans()
        assert code == 0
        assert span.name == "conebreak.tmprobe"
        assert span.attributes["conebreak.seed"] == 9
        assert len(span.attributes["conebreak.config_hash"]) == 64
