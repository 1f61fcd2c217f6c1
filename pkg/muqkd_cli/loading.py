"""
Progress indicators for long simulations
"""

from contextlib import contextmanager

from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TaskProgressColumn, TextColumn, TimeElapsedColumn

# stdout may carry result rows
console = Console(stderr=True)


@contextmanager
def progress_bar(total: int, description: str = "Simulating", enabled: bool = True):
    """
    Context manager for showing a progress bar on stderr.

    Args:
        total: Total number of steps (trials or sweep values)
        description: Description of the task
        enabled: Show nothing when False; the yielded callback still works

    Usage:
        with progress_bar(config.trials, "Trials") as update:
            run_trials(config, progress=update)
    """
    if not enabled:
        yield lambda advance=1: None
        return

    progress = Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TaskProgressColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )

    with progress:
        task_id = progress.add_task(description, total=total)

        def update(advance: int = 1):
            progress.update(task_id, advance=advance)

        yield update


def show_step(message: str, status: str = "working"):
    """
    Show a status line.

    Args:
        message: Step message
        status: Status ("working", "success", "warning", "error")
    """
    icons = {
        "working": "[cyan]→[/cyan]",
        "success": "[green]✓[/green]",
        "warning": "[yellow]⚠[/yellow]",
        "error": "[red]✗[/red]",
    }
    console.print(f"{icons.get(status, '→')} {message}")
