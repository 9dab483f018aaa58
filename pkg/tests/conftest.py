import pytest

from caspian.data import SynthOracleParams, generate_synthetic_dataset
from caspian.model import ModelConfig, build_caspian, save_checkpoint


@pytest.fixture(scope="session")
def desk_dataset_dir(tmp_path_factory):
    """Small synthetic dataset shared by service/CLI tests."""
    out = tmp_path_factory.mktemp("desk_data")
    generate_synthetic_dataset(
        d_x=5, n_locations=60, H=32, W=32, n_scenarios=20,
        params=SynthOracleParams(alpha=1.0, beta=0.3, seed=13), out_dir=out,
    )
    return out


@pytest.fixture(scope="session")
def desk_checkpoint_dir(tmp_path_factory):
    """Untrained desk model checkpoint matching desk_dataset_dir's grid."""
    out = tmp_path_factory.mktemp("desk_model") / "checkpoint"
    model = build_caspian(ModelConfig(H=32, W=32, F=8, K=2, C=2, M=2, w=2), seed=0)
    save_checkpoint(model, out)
    return out
