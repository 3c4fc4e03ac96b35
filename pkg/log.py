import os
import sys
import logging
from logging.handlers import RotatingFileHandler

class Logger:
    _instances = {}

    def __new__(cls, name, log_file=None, max_bytes=5 * 1024 * 1024, backup_count=1):
        """
        Implements the singleton pattern for logger names to ensure no duplicate loggers.

        Args:
            name (str): The name of the logger, usually the class or component name.
            log_file (str, optional): Path of a rotating log file. Defaults to the GALINV_LOG_FILE
                environment variable; no file is written when neither is set.
            max_bytes (int, optional): Maximum size of the log file before rotation. Default is 5MB.
            backup_count (int, optional): Number of backup log files to keep. Default is 1.

        Returns:
            Logger: The singleton Logger instance for the given name.
        """
        if name not in cls._instances:
            cls._instances[name] = super(Logger, cls).__new__(cls)
            cls._instances[name]._initialize(name, log_file, max_bytes, backup_count)
        return cls._instances[name]

    def _initialize(self, name, log_file, max_bytes, backup_count):
        """
        Initializes the logger with a stderr console handler and an optional rotating file handler.

        The level comes from the GALINV_LOG environment variable (DEBUG, INFO, WARNING, ERROR);
        unknown values fall back to WARNING. Stdout is left alone because the CLI writes its
        CSV and JSON-lines records there.

        Args:
            name (str): The name of the logger.
            log_file (str or None): The log file path.
            max_bytes (int): Maximum size of the log file before rotation.
            backup_count (int): Number of backup log files to keep.
        """
        self.logger = logging.getLogger(f"galinv.{name}")
        if not self.logger.hasHandlers():
            level = getattr(logging, os.getenv("GALINV_LOG", "WARNING").upper(), logging.WARNING)
            self.logger.setLevel(level)
            self.logger.propagate = False

            formatter = logging.Formatter('%(asctime)s [%(name)s] - %(levelname)s - %(message)s')

            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(formatter)
            console_handler.setLevel(level)
            self.logger.addHandler(console_handler)

            log_file = log_file or os.getenv("GALINV_LOG_FILE")
            if log_file:
                file_handler = RotatingFileHandler(
                    log_file, maxBytes=max_bytes, backupCount=backup_count
                )
                file_handler.setFormatter(formatter)
                file_handler.setLevel(level)
                self.logger.addHandler(file_handler)

    def get_logger(self):
        """
        Returns the logger instance.

        Returns:
            logging.Logger: The logger instance for the given name.
        """
        return self.logger
