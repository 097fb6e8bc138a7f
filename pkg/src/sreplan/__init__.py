"""Planning toolkit for smart-radio-environment deployments: physically
grounded coverage over 2.5D building maps and exact cost-minimal selection
of reflecting surfaces and repeaters under K-fold coverage."""

__version__ = "0.1.0"

from .activation import ActivationMatrix, compute_activation
from .costs import CostParams, DeviceSpec, build_catalog, ncr_cost, ris_cost
from .link import (BlockageParams, LinkBudget, Mount, RadioParams,
                   blockage_probability, long_term_snr, snr_direct, snr_ncr, snr_ris)
from .phy import (ArrayGeometry, NcrConfig, Path, RisConfig, array_response,
                  build_channel, element_gain, geometric_path, mrt_beamformer,
                  planar_array, ris_phase_config, wave_vector)
from .planner import Plan, PlanningInstance, brute_force_plan, check_feasibility, plan_min_cost
from .scenario import ScenarioConfig, SweepSpec, generate_scene, load_config, load_scene
from .scene import (Building, CandidateSite, Point3, Scene, TestPoint,
                    generate_ncr_sites, generate_ris_sites, generate_test_points,
                    segment_occluded)
