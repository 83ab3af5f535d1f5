from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    eq: float = 1e-12       # point identity, normalized homogeneous coords
    root: float = 1e-10     # spherical residual of a computed preimage
    res: float = 1e-10      # normalized resultant floor for P, Q coprimality
    fix: float = 1e-8       # spherical residual of a periodic point

    def to_dict(self):
        return asdict(self)

    def updated(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


DEFAULT = Tolerances()


def resolve(tol):
    return DEFAULT if tol is None else tol
