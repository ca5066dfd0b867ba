from pydantic_settings import BaseSettings


class ConebreakSettings(BaseSettings):
    conebreak_quadrature_rule: str = "lobatto"
    conebreak_panel_order: int = 6

    conebreak_expm_crossover: float = 1.0
    conebreak_saturation_exponent: float = 700.0
    conebreak_assumption_slack: float = 1e-10
    conebreak_power_sample_max: float = 1e3

    conebreak_shooting_slope_min: float = 1e-3
    conebreak_shooting_slope_max: float = 1e3
    conebreak_shooting_slope_count: int = 31
    conebreak_shooting_rtol: float = 1e-11
    conebreak_shooting_atol: float = 1e-13
    conebreak_newton_tol: float = 1e-9
    conebreak_newton_max_iter: int = 60

    conebreak_luxemburg_tol: float = 1e-10
    conebreak_luxemburg_max_halvings: int = 200
    conebreak_probe_basis_size: int = 4

    conebreak_stability_ntheta: int = 64
    conebreak_cross_check_tol: float = 1e-6

    conebreak_projection_tol: float = 1e-12
    conebreak_projection_max_iter: int = 500

    conebreak_fibering_rtol: float = 1e-10
    conebreak_fibering_max_steps: int = 200
    conebreak_mp_tol: float = 1e-6
    conebreak_mp_max_iter: int = 3000
    conebreak_mp_path_size: int = 40
    conebreak_mp_stall_tol: float = 1e-12
    conebreak_mp_stall_patience: int = 20
    conebreak_mp_tau0: float = 0.05
    conebreak_mp_geometry_samples: int = 8
    conebreak_mp_rho_fraction: float = 0.1
    conebreak_mp_armijo: float = 1e-4
    conebreak_mp_min_step: float = 1e-12


settings = ConebreakSettings()
