"""Utils package initialization."""

from privcon.utils.console import (
    console,
    err_console,
    setup_logging,
    get_logger,
    print_header,
    print_success,
    print_error,
    print_warning,
    print_info,
    create_table,
)

from privcon.utils.helpers import (
    create_directory,
    write_file,
    resolve_output_dir,
    canonical_json,
    stable_hash,
    format_bits,
)

__all__ = [
    "console",
    "err_console",
    "setup_logging",
    "get_logger",
    "print_header",
    "print_success",
    "print_error",
    "print_warning",
    "print_info",
    "create_table",
    "create_directory",
    "write_file",
    "resolve_output_dir",
    "canonical_json",
    "stable_hash",
    "format_bits",
]
