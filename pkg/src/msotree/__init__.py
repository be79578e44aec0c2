"""Workbench for monadic second-order theories of finite chains and trees.

Partial theories and their sum algebra, determination checks for the
composition statements, scattered-order terms with degree tags, tame/wild
classification, well-order synthesis with verifiable certificates, and
counterexample engines against definable choice.
"""

__version__ = "0.1.0"

from .structures import (FinStructure, GraftSpec, MeetSegment, build_structure,
                         branch_decompose, build_embedding_frame, chain_of,
                         graft_compose, pure_set, region_decompose,
                         segment_decompose, tree_of)
from .theory import (Theory, compute_theory, eval_direct, eval_on_theory,
                     realized_theories, reduce_depth)
from .composition import (AdditiveColoring, FDConfig, FDReport, coloring_of,
                          restriction_theory, sigma_theories, sum_theories,
                          verify_fd)
from .scattered import (HdegTag, LexModel, build_z_set, catalog_term, embed_lex,
                        hdeg, lex_model, parse_order_term, realize_prefix,
                        thin_homogeneous)
from .synthesis import (Verdict, WellOrderCertificate, classify,
                        parse_presentation, parse_tree_term, rank_map,
                        synth_chain_wellorder, synth_tree_wellorder,
                        verify_certificate)
from .falsifier import (ChoiceWitness, check_choice_function,
                        find_indiscernible_pair, find_monochromatic)
from .formulas import formula_suite, parse_formula
