"""Tests for __main__ module."""

from unittest.mock import MagicMock, patch

import pytest
import structlog

from multipcl.__main__ import exit_code, main, make_level_filter, parse_args, setup_logging
from multipcl.config.loader import ConfigNotFoundError
from multipcl.errors import (
    CacheError,
    CheckpointError,
    ConfigurationError,
    ContractError,
    DomainError,
    IngestError,
    ManifestValidationError,
    StratificationError,
    TrainingError,
    UsageError,
)


class TestSetupLogging:
    """Tests for setup_logging function."""

    def test_setup_logging_configures_structlog(self):
        """setup_logging should configure structlog."""
        with patch("multipcl.__main__.structlog") as mock_structlog:
            setup_logging()

            mock_structlog.configure.assert_called_once()
            call_kwargs = mock_structlog.configure.call_args[1]
            assert "processors" in call_kwargs
            assert "wrapper_class" in call_kwargs
            assert "logger_factory" in call_kwargs

    def test_setup_logging_uses_console_renderer_for_tty(self):
        """Should use ConsoleRenderer when stderr is a tty."""
        with patch("multipcl.__main__.structlog") as mock_structlog:
            with patch("multipcl.__main__.sys") as mock_sys:
                mock_sys.stderr.isatty.return_value = True
                setup_logging()

                mock_structlog.dev.ConsoleRenderer.assert_called()
                mock_structlog.processors.JSONRenderer.assert_not_called()

    def test_setup_logging_uses_json_renderer_for_non_tty(self):
        """Should use JSONRenderer when stderr is not a tty."""
        with patch("multipcl.__main__.structlog") as mock_structlog:
            with patch("multipcl.__main__.sys") as mock_sys:
                mock_sys.stderr.isatty.return_value = False
                setup_logging()

                mock_structlog.processors.JSONRenderer.assert_called()

    def test_explicit_format_beats_tty_detection(self):
        """format json on a tty still renders JSON."""
        with patch("multipcl.__main__.structlog") as mock_structlog:
            with patch("multipcl.__main__.sys") as mock_sys:
                mock_sys.stderr.isatty.return_value = True
                setup_logging("info", "json")

                mock_structlog.processors.JSONRenderer.assert_called()
                mock_structlog.dev.ConsoleRenderer.assert_not_called()


class TestLevelFilter:
    """Tests for make_level_filter."""

    def test_drops_below_minimum(self):
        """debug events are dropped at level info."""
        level_filter = make_level_filter("info")
        with pytest.raises(structlog.DropEvent):
            level_filter(None, "debug", {"event": "x"})

    def test_passes_at_or_above_minimum(self):
        """warning passes at level warn."""
        level_filter = make_level_filter("warn")
        event = {"event": "x"}
        assert level_filter(None, "warning", event) is event


class TestParseArgs:
    """Tests for parse_args function."""

    def test_parse_args_defaults(self):
        """Should use default values when only the subcommand is given."""
        args = parse_args(["stats"])

        assert args.command == "stats"
        assert args.path is None
        assert args.jobs == 1
        assert args.out == "runs"
        assert args.overrides == []

    def test_parse_args_all_flags(self):
        """Should parse every flag."""
        args = parse_args(
            [
                "grid",
                "corpus.jsonl",
                "--config",
                "exp.yaml",
                "--seed",
                "4",
                "--jobs",
                "3",
                "--out",
                "results",
                "--subset",
                "V,T,V+T",
                "--variant",
                "both",
                "--set",
                "epochs=5",
                "--set",
                "fusion.model_dim=8",
            ]
        )

        assert args.path == "corpus.jsonl"
        assert args.config == "exp.yaml"
        assert (args.seed, args.jobs, args.out) == (4, 3, "results")
        assert args.subset == "V,T,V+T"
        assert args.variant == "both"
        assert args.overrides == ["epochs=5", "fusion.model_dim=8"]

    def test_unknown_subcommand(self):
        """Unknown subcommands raise UsageError instead of exiting."""
        with pytest.raises(UsageError, match="serve"):
            parse_args(["serve"])

    def test_bad_integer(self):
        """Malformed flag values are usage errors."""
        with pytest.raises(UsageError):
            parse_args(["eval", "--seed", "many"])


class TestExitCode:
    """Tests for the error-to-exit-code mapping."""

    @pytest.mark.parametrize(
        "error,code",
        [
            (UsageError("x"), 2),
            (ConfigurationError("x"), 3),
            (ConfigNotFoundError("x"), 4),
            (FileNotFoundError("x"), 4),
            (ManifestValidationError("e1", "x"), 5),
            (StratificationError("x"), 5),
            (DomainError("x"), 5),
            (IngestError("e1", "x"), 6),
            (CacheError("header", "x"), 6),
            (CheckpointError("x"), 6),
            (TrainingError("x"), 6),
            (ContractError("x"), 6),
            (RuntimeError("x"), 1),
        ],
    )
    def test_mapping(self, error, code):
        """Each error class has its own exit status."""
        assert exit_code(error) == code


class TestMain:
    """Tests for main function."""

    def test_main_calls_setup_and_run(self):
        """main should setup logging and run the workflow."""
        with patch("multipcl.__main__.setup_logging") as mock_setup:
            with patch("multipcl.__main__.run", return_value=0) as mock_run:
                with pytest.raises(SystemExit) as exc_info:
                    main(["stats", "m.jsonl", "--seed", "2"])

        assert exc_info.value.code == 0
        assert mock_setup.call_count == 2
        invocation, config = mock_run.call_args[0]
        assert invocation.command == "stats"
        assert invocation.path == "m.jsonl"
        assert config.seed == 2

    def test_log_level_flag_beats_config(self):
        """--log-level wins over logging.level."""
        with patch("multipcl.__main__.setup_logging") as mock_setup:
            with patch("multipcl.__main__.run", return_value=0):
                with pytest.raises(SystemExit):
                    main(["stats", "--log-level", "debug", "--set", "logging.level=error"])

        assert mock_setup.call_args[0] == ("debug", "auto")

    def test_main_handles_keyboard_interrupt(self):
        """main should handle KeyboardInterrupt gracefully."""
        with patch("multipcl.__main__.setup_logging"):
            with patch("multipcl.__main__.run", side_effect=KeyboardInterrupt()):
                with pytest.raises(SystemExit) as exc_info:
                    main(["stats"])

        assert exc_info.value.code == 130

    def test_one_line_diagnostic(self, capsys):
        """Failures print error: <class>: <message> on one line."""
        error = ManifestValidationError("e7", "spans on a non-PCL entry")
        with patch("multipcl.__main__.setup_logging"):
            with patch("multipcl.__main__.run", side_effect=error):
                with pytest.raises(SystemExit) as exc_info:
                    main(["validate"])

        assert exc_info.value.code == 5
        err = capsys.readouterr().err.strip().splitlines()
        assert err[-1] == "error: ManifestValidationError: entry 'e7': spans on a non-PCL entry"

    def test_usage_error_exit_code(self, capsys):
        """An unknown subcommand exits with the usage status."""
        with pytest.raises(SystemExit) as exc_info:
            main(["serve"])

        assert exc_info.value.code == 2
        assert capsys.readouterr().err.startswith("error: UsageError:")

    def test_missing_config_exit_code(self, tmp_path, capsys):
        """An explicit config path that does not exist is a missing input."""
        with patch("multipcl.__main__.setup_logging"):
            with pytest.raises(SystemExit) as exc_info:
                main(["stats", "--config", str(tmp_path / "absent.yaml")])

        assert exc_info.value.code == 4
        assert "ConfigNotFoundError" in capsys.readouterr().err

    def test_bad_override_exit_code(self, capsys):
        """Unknown config keys are configuration errors."""
        with patch("multipcl.__main__.setup_logging"):
            with pytest.raises(SystemExit) as exc_info:
                main(["stats", "--set", "fusion.nope=1"])

        assert exc_info.value.code == 3
        assert "fusion.nope" in capsys.readouterr().err

    def test_negative_seed_exit_code(self, capsys):
        """A negative --seed is rejected as a configuration error."""
        with patch("multipcl.__main__.setup_logging"):
            with pytest.raises(SystemExit) as exc_info:
                main(["stats", "--seed", "-1"])

        assert exc_info.value.code == 3
        assert "ConfigurationError" in capsys.readouterr().err

    def test_unexpected_failure_logged(self):
        """Unclassified exceptions are logged with a traceback and exit 1."""
        with patch("multipcl.__main__.setup_logging"):
            with patch("multipcl.__main__.run", side_effect=RuntimeError("boom")):
                with patch("multipcl.__main__.structlog") as mock_structlog:
                    mock_logger = MagicMock()
                    mock_structlog.get_logger.return_value = mock_logger
                    with pytest.raises(SystemExit) as exc_info:
                        main(["stats"])

        assert exc_info.value.code == 1
        mock_logger.error.assert_called_once_with(
            "unexpected failure", error="boom", exc_info=True
        )

    def test_end_to_end_stats(self, tmp_path, fixture_manifest, capsys):
        """The real stats workflow exits 0 and prints the table."""
        with patch("multipcl.__main__.setup_logging"):
            with pytest.raises(SystemExit) as exc_info:
                main(["stats", str(fixture_manifest), "--out", str(tmp_path)])

        assert exc_info.value.code == 0
        assert (tmp_path / "stats.json").exists()
        assert "Non-PCL" in capsys.readouterr().out
