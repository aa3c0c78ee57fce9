"""
Модуль с контекстными переменными для логирования
run_id - идентификатор запуска эксперимента (хэш конфигурации)
cell - текущая ячейка эксперимента (метод / eps / повтор)
"""

from contextvars import ContextVar


run_id_var: ContextVar[str] = ContextVar("run_id", default="-")
cell_var: ContextVar[str] = ContextVar("cell", default="-")
