"""
Process entry point for the pipeline subcommands.

Every failure ends in one stderr line ``error[<code>]: <message>``: exit
status 2 for usage errors, 1 for pipeline errors, 0 on success.
"""
import logging
import sys

from decouple import Config, RepositoryEnv
from django.core.management import get_commands, load_command_class
from django.core.management.base import CommandError

from core.exceptions import ChainpulseError, PreconditionError

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('simulate', 'ingest', 'explore', 'forecast', 'classify', 'report')
USAGE_CODE = 'usage'
IO_CODE = 'io_error'


class UsageError(Exception):
    code = USAGE_CODE


def error_line(code, message):
    text = ' '.join(str(message).split())
    return f"error[{code}]: {text}"


def _config_path(args):
    for index, arg in enumerate(args):
        if arg == '--config':
            if index + 1 >= len(args):
                raise UsageError('--config needs a file name')
            return args[index + 1]
        if arg.startswith('--config='):
            return arg.split('=', 1)[1]
    return None


def _given(option, args):
    return any(arg == option or arg.startswith(option + '=') for arg in args)


def config_arguments(parser, args):
    """
    ``args`` preceded by the flags read from the ``--config`` file, leaving
    out those already on the command line. File keys are flag names
    without the leading dashes.
    """
    path = _config_path(args)
    if path is None:
        return list(args)
    try:
        repository = RepositoryEnv(path)
    except FileNotFoundError:
        raise PreconditionError(f"no such config file: {path}", code='missing_file')
    values = Config(repository)
    actions = {
        option: action
        for action in parser._actions
        for option in action.option_strings
    }

    extra = []
    for key in sorted(repository.data):
        option = '--' + key.strip().lstrip('-').replace('_', '-')
        if option == '--config':
            continue
        if option not in actions:
            raise UsageError(f"{path}: unknown key {key!r}")
        if _given(option, args):
            continue
        if actions[option].nargs == 0:
            if values(key, cast=bool):
                extra.append(option)
        else:
            extra += [option, repository.data[key]]
    if extra:
        logger.info(f"Read {len(extra)} argument(s) from {path}")
    return extra + list(args)


def parse(command, name, args):
    parser = command.create_parser('chainpulse', name)
    try:
        options = parser.parse_args(config_arguments(parser, args))
    except CommandError as exc:
        raise UsageError(str(exc).removeprefix('Error: '))
    return vars(options)


def run(args=None, stderr=None):
    """
    Run ``<subcommand> [flags]`` and return the exit status.
    """
    args = list(sys.argv[1:] if args is None else args)
    stderr = stderr or sys.stderr
    if not args or args[0] not in SUBCOMMANDS:
        given = args[0] if args else ''
        stderr.write(error_line(USAGE_CODE, f"unknown subcommand {given!r}; expected one of {', '.join(SUBCOMMANDS)}") + '\n')
        return 2

    name, rest = args[0], args[1:]
    command = load_command_class(get_commands()[name], name)
    try:
        options = parse(command, name, rest)
    except (UsageError, ChainpulseError) as exc:
        stderr.write(error_line(getattr(exc, 'code', USAGE_CODE), exc) + '\n')
        return 2

    positional = options.pop('args', ())
    try:
        command.execute(*positional, **options)
    except ChainpulseError as exc:
        stderr.write(error_line(exc.code, exc.detail) + '\n')
        return 1
    except CommandError as exc:
        stderr.write(error_line(USAGE_CODE, exc) + '\n')
        return 2
    except OSError as exc:
        stderr.write(error_line(IO_CODE, exc) + '\n')
        return 1
    return 0
