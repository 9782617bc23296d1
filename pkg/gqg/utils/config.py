import os


class Config:
    # Output configuration
    OUTPUT_ROOT: str = os.getenv('GQG_OUTPUT_ROOT', './gqg-output')
    SNAPSHOT_COUNT: int = int(os.getenv('GQG_SNAPSHOT_COUNT', '16'))

    # Processing configuration
    MAX_WORKERS: int = int(os.getenv('GQG_MAX_WORKERS', '4'))

    # Time stepping
    CFL_SAFETY: float = float(os.getenv('GQG_CFL_SAFETY', '0.5'))

    # Diagnostics
    SUP_REFINEMENT: int = int(os.getenv('GQG_SUP_REFINEMENT', '2'))
    NOISE_FLOOR: float = float(os.getenv('GQG_NOISE_FLOOR', '1e-14'))

    # Certification
    DEFAULT_C1: float = float(os.getenv('GQG_DEFAULT_C1', '1.0'))
    DEFAULT_C2: float = float(os.getenv('GQG_DEFAULT_C2', '1.0'))
    CERT_POINTS: int = int(os.getenv('GQG_CERT_POINTS', '512'))
    CERT_XI_MIN_FACTOR: float = float(os.getenv('GQG_CERT_XI_MIN_FACTOR', '1e-6'))
    CERT_XI_MAX_FACTOR: float = float(os.getenv('GQG_CERT_XI_MAX_FACTOR', '1e3'))
    QUAD_REL_TOL: float = float(os.getenv('GQG_QUAD_REL_TOL', '1e-10'))
    TAIL_CUTOFF_FACTOR: float = float(os.getenv('GQG_TAIL_CUTOFF_FACTOR', '1e3'))
    SEARCH_MAX_HALVINGS: int = int(os.getenv('GQG_SEARCH_MAX_HALVINGS', '40'))

    # MOC verification on fields
    VERIFY_NEAR_CELLS: int = int(os.getenv('GQG_VERIFY_NEAR_CELLS', '6'))
    VERIFY_FAR_PAIRS: int = int(os.getenv('GQG_VERIFY_FAR_PAIRS', '20000'))

    # Service configuration
    SERVICE_NAME: str = os.getenv('SERVICE_NAME', 'gqg')
    LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'INFO')

    @classmethod
    def validate(cls) -> bool:
        """Validate configuration parameters"""
        positive = [
            'MAX_WORKERS',
            'SUP_REFINEMENT',
            'DEFAULT_C1',
            'DEFAULT_C2',
            'QUAD_REL_TOL',
            'SEARCH_MAX_HALVINGS',
            'VERIFY_NEAR_CELLS',
        ]

        for var in positive:
            if getattr(cls, var) <= 0:
                raise ValueError(f"Configuration value {var} must be positive")

        if not 0 < cls.CFL_SAFETY <= 1:
            raise ValueError("GQG_CFL_SAFETY must lie in (0, 1]")
        if cls.CERT_POINTS < 2:
            raise ValueError("GQG_CERT_POINTS must be at least 2")
        if not 0 < cls.CERT_XI_MIN_FACTOR < cls.CERT_XI_MAX_FACTOR:
            raise ValueError("Certification xi range factors must satisfy 0 < min < max")
        if cls.TAIL_CUTOFF_FACTOR <= 1:
            raise ValueError("GQG_TAIL_CUTOFF_FACTOR must exceed 1")
        if cls.SNAPSHOT_COUNT < 0 or cls.VERIFY_FAR_PAIRS < 0:
            raise ValueError("Counts must be nonnegative")
        if not cls.OUTPUT_ROOT:
            raise ValueError("GQG_OUTPUT_ROOT is not set")

        return True
