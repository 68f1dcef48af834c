"""Shared molecule corpus and helpers for the test suite."""

import numpy as np
import pytest

# Dialect-clean molecules exercising chains, branches, rings, aromatics,
# charges, heteroatoms, and every bond order.  Fused aromatics and
# lone-pair aromatics (furan, pyrrole) are outside the dialect: aromatic
# bonds count 1.5 toward valence with the sum rounded up, which caps an
# aromatic atom at two ring bonds and rejects [nH]/o ring forms.
MOLECULE_CORPUS = [
    "CCO",
    "CC(C)O",
    "CCCC",
    "C1CC1",
    "C1CCCCC1",
    "c1ccccc1",
    "c1ccccc1O",
    "Cc1ccccc1",
    "CC(=O)O",
    "CC(=O)OC",
    "CC(=O)NC",
    "CCN",
    "CCS",
    "CCCl",
    "CC(C)(C)C",
    "C=CC=C",
    "C#N",
    "CC#CC",
    "OCC(O)CO",
    "C1CCCCC1CC(=O)O",
    "c1ccncc1",
    "[NH4+]",
    "CC[O-]",
    "ClC(Cl)(Cl)Cl",
    "CP(=O)(O)O",
    "CS(=O)(=O)C",
    "C1CC1c1ccccc1",
    "C%10CCCC%10",
]

# Subset whose unprotected-atom pool is at least floor(0.3 * atom_count),
# so a 30% graph-mask request is never clipped by the protection rules.
MASKABLE_SMILES = [
    "CCCC",
    "CCCCCC",
    "CC(C)CCO",
    "Cc1ccccc1C",
    "CCCCCCCCCC",
    "CCSCC",
    "CCOC",
    "C1CCCCC1CCCC",
    "CC(=O)OCCCCC",
    "CC(C)(C)CCCC",
]


@pytest.fixture(scope="session")
def corpus_smiles():
    return list(MOLECULE_CORPUS)


@pytest.fixture(scope="session")
def maskable_smiles():
    return list(MASKABLE_SMILES)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
