import time
from typing import Callable

from pydantic import ValidationError

from app.core.errors import LabError
from app.utils.logger import log_command_finished, log_command_startup, logger


class LoggingMiddleware:
    """Wraps every command dispatch: logs startup, timing and the exit code"""

    def __init__(self, command: str, config_path, workers: int):
        self.command = command
        self.config_path = config_path
        self.workers = workers

    def dispatch(self, call_next: Callable[[], int]) -> int:
        log_command_startup(self.command, str(self.config_path) if self.config_path else None, self.workers)

        # Record start time
        start_time = time.time()
        exit_code = 1
        try:
            exit_code = call_next()
            return exit_code
        except LabError as e:
            exit_code = e.exit_code
            raise
        except ValidationError:
            exit_code = 2
            raise
        finally:
            # Calculate process time
            process_time = time.time() - start_time
            try:
                log_command_finished(self.command, exit_code, process_time)
            except Exception as e:
                # Logging errors never change the command's result
                logger.debug(f"Could not log command completion: {e}")
