"""
Tests for the logging helpers.
"""

import logging

import pytest

from utils.logger import attach_package_loggers, configure_third_party_loggers, parse_level, setup_logger


@pytest.fixture
def clean_logger():
    names = []

    def make(name):
        names.append(name)
        return name

    yield make
    for name in names + ['core', 'patchlab']:
        log = logging.getLogger(name)
        for handler in list(log.handlers):
            log.removeHandler(handler)
            handler.close()
        log.propagate = True


@pytest.mark.parametrize('value,expected', [
    ('debug', logging.DEBUG), ('WARNING', logging.WARNING), (logging.ERROR, logging.ERROR), ('chatty', logging.INFO),
])
def test_parse_level(value, expected):
    assert parse_level(value) == expected


def test_file_and_console_handlers(tmp_path, clean_logger):
    log = setup_logger(clean_logger('erpbench-test'), level='WARNING', log_dir=str(tmp_path))
    assert log.level == logging.DEBUG
    levels = sorted(h.level for h in log.handlers)
    assert levels == [logging.DEBUG, logging.WARNING]

    log.debug('file only')
    for handler in log.handlers:
        handler.flush()
    assert 'file only' in (tmp_path / 'erpbench-test.log').read_text(encoding='utf-8')

    assert setup_logger(clean_logger('erpbench-test'), log_dir=str(tmp_path)) is log
    assert len(log.handlers) == 2


def test_console_only(clean_logger):
    log = setup_logger(clean_logger('erpbench-console'), level=logging.ERROR, log_dir=None)
    assert log.level == logging.ERROR
    assert len(log.handlers) == 1


def test_attach_package_loggers(tmp_path, clean_logger):
    log = setup_logger(clean_logger('erpbench-attach'), log_dir=str(tmp_path))
    attach_package_loggers(log, packages=('core', 'patchlab'))
    for name in ('core', 'patchlab'):
        package_logger = logging.getLogger(name)
        assert not package_logger.propagate
        assert set(log.handlers) <= set(package_logger.handlers)

    logging.getLogger('core.features').info('routed through the package logger')
    for handler in log.handlers:
        handler.flush()
    assert 'routed through' in (tmp_path / 'erpbench-attach.log').read_text(encoding='utf-8')


def test_third_party_levels():
    configure_third_party_loggers(logging.ERROR)
    assert logging.getLogger('sklearn').level == logging.ERROR
