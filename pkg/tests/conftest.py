import pytest

from segspot.runner import ExperimentConfig, write_config_file
from segspot.synthetic import build_dataset, write_dataset


@pytest.fixture(scope="session")
def small_dataset_dir(tmp_path_factory):
    """A tiny on-disk synthetic dataset shared by runner and CLI tests."""
    target = tmp_path_factory.mktemp("small")
    dataset = build_dataset(n_classes=4, per_class_per_page=2, n_pages=2, seed=5)
    gt_path, pages_dir = write_dataset(target, dataset)
    return target, gt_path, pages_dir


@pytest.fixture()
def small_config(small_dataset_dir, tmp_path):
    target, gt_path, pages_dir = small_dataset_dir
    config = ExperimentConfig(
        dataset_name="small",
        ground_truth=gt_path,
        pages_dir=pages_dir,
        output=tmp_path / "out",
        seed=7,
        levels=(0.5, 1.0),
        methods=("quadtree", "hog"),
    )
    path = tmp_path / "config.ini"
    write_config_file(path, config)
    return config, path
