import pytest

from tddnet import analysis
from tddnet.validation import paper_network


@pytest.fixture(scope="session")
def paper_net():
    return paper_network()


@pytest.fixture(scope="session")
def paper_pmf(paper_net):
    return analysis.cell_load_pmf(paper_net.density_ratio, paper_net.ue_cap)
