from app.services.command_service import CommandService


def get_command_service() -> CommandService:
    """Process-wide CommandService; overridden in tests through dependency_overrides"""
    if not hasattr(get_command_service, "_instance"):
        get_command_service._instance = CommandService()
    return get_command_service._instance
