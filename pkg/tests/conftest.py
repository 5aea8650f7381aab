import hypothesis
import numpy as np

from skillrank.annotation import PairSets, pairs_from_scores
from skillrank.datastore import FeatureSequence, Modality, TaskDataset

hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("default")


def constant_skill_dataset(
    skills: dict[str, float],
    dim: int = 1,
    length: int = 24,
    noise_sd: float = 0.0,
    seed: int = 0,
    task_id: str = "tiny",
) -> TaskDataset:
    """Both modalities carry rows equal to the video's skill (plus noise).

    Small and perfectly separable: a positive linear scorer ranks it exactly.
    """
    rng = np.random.default_rng(seed)
    sequences = {}
    for modality in (Modality.SPATIAL, Modality.TEMPORAL):
        for video, skill in skills.items():
            rows = np.full((length, dim), float(skill))
            if noise_sd:
                rows = rows + rng.normal(0.0, noise_sd, size=rows.shape)
            sequences[(video, modality)] = FeatureSequence(
                video_id=video, modality=modality, rows=rows.astype(np.float32)
            )
    return TaskDataset(
        task_id=task_id,
        modalities=(Modality.SPATIAL, Modality.TEMPORAL),
        videos=tuple(sorted(skills)),
        sequences=sequences,
        scores={v: float(s) for v, s in skills.items()},
    )


def separable_pairs(skills: dict[str, float]) -> PairSets:
    return pairs_from_scores(skills)
