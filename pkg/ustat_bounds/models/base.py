from collections.abc import Mapping
from collections.abc import Sequence
from pprint import pformat
from typing import Any, Iterable, TypeAlias

from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import RootModel

Point: TypeAlias = float
Probability: TypeAlias = float
MomentOrder: TypeAlias = float
SampleSize: TypeAlias = int
Degree: TypeAlias = int


class BaseUModel(BaseModel):
  """Provides validation settings and serialization for every domain model.

    Models are immutable once validated so they can be shared across threads.
    """

  model_config = ConfigDict(frozen=True,
                            validate_default=True,
                            use_enum_values=True,
                            arbitrary_types_allowed=True)

  def __str__(self) -> str:
    return self.to_json()

  def to_dict(self, exclude_none: bool = True) -> dict[str, Any]:
    """JSON-compatible dictionary of the model.

        Numpy tables become nested lists and fractions become "p/q" strings
        through the field serializers of the subclasses.

        Args:
            exclude_none: If True, optional fields that are unset are dropped.

        Returns:
            dict[str, Any]: The dictionary, ready for `json.dumps`.
        """
    return self.model_dump(mode="json", exclude_none=exclude_none)

  def to_json(self, exclude_none: bool = True) -> str:
    """Indented JSON text of `to_dict`."""
    return self.model_dump_json(exclude_none=exclude_none, indent=2)


class _RootView:
  """Read-only container behaviour shared by the root models below."""

  def __repr__(self) -> str:
    return f"{type(self).__name__}({self.root})"

  def __str__(self) -> str:
    return pformat(self.root, compact=True, width=80)

  def __len__(self) -> int:
    return len(self.root)

  def __getitem__(self, key: Any) -> Any:
    return self.root[key]

  def __eq__(self, other: Any) -> bool:
    if isinstance(other, _RootView):
      other = other.root
    return self.root == other


class DictLikeRootModel(_RootView, RootModel, Mapping):
  """A root model read like a dictionary, e.g. γ(d) keyed by degree."""

  def __iter__(self) -> Iterable[Any]:
    return iter(self.root)


class ListLikeRootModel(_RootView, Sequence, RootModel):
  """A root model read like a list, e.g. the verdicts of one run."""
