import logging
import os
import threading
from concurrent.futures import Future
from concurrent.futures import ThreadPoolExecutor

from django.core.exceptions import ImproperlyConfigured
from django.tasks import Task
from django.tasks import TaskResult
from django.tasks import TaskResultStatus
from django.tasks.backends.base import BaseTaskBackend
from django.tasks.base import TaskError
from django.tasks.exceptions import TaskResultDoesNotExist
from django.tasks.signals import task_enqueued
from django.tasks.signals import task_finished
from django.tasks.signals import task_started
from django.utils import timezone
from django.utils.crypto import get_random_string

from optimal_balance.utils import get_exception_traceback
from optimal_balance.utils import get_module_path

logger = logging.getLogger(__name__)


class ThreadPoolBackend(BaseTaskBackend):
    """
    Runs tasks on an in-process thread pool and keeps each result until `get_result` collects it.

    Sweep cells are CPU-bound numpy work with no shared mutable state, so a pool of threads in the calling process is
    all the parallelism an experiment needs.
    """

    supports_defer = False
    supports_get_result = True
    supports_priority = False
    supports_async_task = False

    def __init__(self, alias, params):
        super().__init__(alias, params)

        self.executor = None
        self.futures: dict[str, Future] = {}
        self.lock = threading.Lock()

    def get_workers(self) -> int:
        workers = self.options.get("WORKERS")
        if workers is None:
            return os.cpu_count() or 1

        if not isinstance(workers, int) or workers < 1:
            raise ImproperlyConfigured("WORKERS must be a positive integer.")

        return workers

    def get_executor(self) -> ThreadPoolExecutor:
        with self.lock:
            if self.executor is None:
                self.executor = ThreadPoolExecutor(max_workers=self.get_workers(), thread_name_prefix=f"tasks-{self.alias}")

            return self.executor

    def configure_pool(self, workers: int):
        """Replace the pool with one of `workers` threads, after the running tasks have finished."""
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}.")

        with self.lock:
            if self.executor is not None:
                self.executor.shutdown(wait=True)

            self.executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix=f"tasks-{self.alias}")

    def enqueue(self, task: Task, args, kwargs):
        self.validate_task(task)

        task_result = TaskResult(
            task=task,
            id=get_random_string(32),
            status=TaskResultStatus.READY,
            enqueued_at=None,
            started_at=None,
            last_attempted_at=None,
            finished_at=None,
            args=args,
            kwargs=kwargs,
            backend=self.alias,
            errors=[],
            worker_ids=[],
        )

        object.__setattr__(task_result, "enqueued_at", timezone.now())
        task_enqueued.send(type(self), task_result=task_result)

        future = self.get_executor().submit(self.run_task, task_result)
        with self.lock:
            self.futures[task_result.id] = future

        return task_result

    def run_task(self, task_result: TaskResult) -> TaskResult:
        task = task_result.task
        now = timezone.now()

        object.__setattr__(task_result, "status", TaskResultStatus.RUNNING)
        object.__setattr__(task_result, "started_at", now)
        object.__setattr__(task_result, "last_attempted_at", now)
        task_result.worker_ids.append(threading.current_thread().name)

        task_started.send(sender=type(self), task_result=task_result)

        try:
            return_value = task.call(*task_result.args, **task_result.kwargs)

            object.__setattr__(task_result, "_return_value", return_value)
            object.__setattr__(task_result, "status", TaskResultStatus.SUCCESSFUL)
        except BaseException as e:
            logger.debug("Task %s failed: %s", task_result.id, e)

            task_result.errors.append(
                TaskError(
                    exception_class_path=get_module_path(type(e)),
                    traceback=get_exception_traceback(e),
                )
            )

            object.__setattr__(task_result, "status", TaskResultStatus.FAILED)

        object.__setattr__(task_result, "finished_at", timezone.now())
        task_finished.send(sender=type(self), task_result=task_result)

        return task_result

    def get_result(self, result_id: str) -> TaskResult:
        """Block until the task has finished and return its result. Each result is handed out once."""
        with self.lock:
            future = self.futures.get(result_id)
        if future is None:
            raise TaskResultDoesNotExist(result_id)

        task_result = future.result()
        with self.lock:
            self.futures.pop(result_id, None)

        return task_result
