"""Create a campaign file with an unresolved initial round for UI tests."""
import sys

from paretopilot import campaign as camp
from paretopilot import design_space as ds
from paretopilot.acquisition import AcquisitionConfig, Strategy


def main(path: str) -> None:
    cfg = camp.CampaignConfig(
        acquisition=AcquisitionConfig(strategy=Strategy.PARETO_UCB, q=3),
        hitl_enabled=True, seed=23, pool_size=256, fit_restarts=3,
        pin_noise=1e-10)
    c = camp.Campaign(ds.default_space(), cfg)
    c.start(10)
    camp.save(c, path)


if __name__ == "__main__":
    main(sys.argv[1])
