import logging
from typing import Callable, Dict

from src.modules import InputError
from src.modules.victim.base import Victim
from src.modules.victim.prototype import load_prototype_victim
from src.modules.victim.remote import RemoteVictim

logger = logging.getLogger(__name__)

VictimFactory = Callable[[str], Victim]

_VICTIM_KINDS: Dict[str, VictimFactory] = {}


class VictimSpecError(InputError):
    pass


def register_victim_kind(prefix: str) -> Callable[[VictimFactory], VictimFactory]:
    """
    Registers a factory for victim specs of the form `<prefix>:<location>`.
    """
    def decorator(factory: VictimFactory) -> VictimFactory:
        _VICTIM_KINDS[prefix] = factory
        return factory
    return decorator


@register_victim_kind("prototype")
def _prototype_victim(location: str) -> Victim:
    return load_prototype_victim(location)


@register_victim_kind("http")
def _http_victim(location: str) -> Victim:
    if location.startswith(("http://", "https://")):
        url = location
    elif location.startswith("//"):
        url = "http:" + location
    else:
        url = "http://" + location
    return RemoteVictim(url)


def victim_kinds():
    return sorted(_VICTIM_KINDS)


def resolve_victim(spec: str) -> Victim:
    """
    Builds a victim from a spec string such as `prototype:model.npz` or
    `http:127.0.0.1:5000`. Full `http://` and `https://` URLs are accepted as is.

    Raises:
        VictimSpecError: If the spec names no registered kind.
    """
    if spec.startswith(("http://", "https://")):
        return _VICTIM_KINDS["http"](spec)
    kind, sep, location = spec.partition(":")
    if not sep or not location:
        raise VictimSpecError(
            f"Victim spec {spec!r} must look like '<kind>:<location>'.")
    factory = _VICTIM_KINDS.get(kind)
    if factory is None:
        raise VictimSpecError(
            f"Unknown victim kind '{kind}'; registered kinds: {', '.join(victim_kinds())}.")
    logger.info("Resolving %s victim at %s.", kind, location)
    return factory(location)
