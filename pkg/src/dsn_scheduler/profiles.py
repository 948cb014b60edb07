"""Published per-mission request profiles and the antenna roster used by the generator."""

from __future__ import annotations

from dataclasses import dataclass

from .core import Resource


@dataclass(frozen=True)
class MissionProfile:
    """Average request parameters for one mission over one week.

    ``allowed_diameters`` restricts which antenna classes may see the
    spacecraft; ``array_size`` > 1 makes every view period an antenna array.
    """

    mission_id: str
    T_R: float
    n_a: int
    d_min_avg: float
    d_max_avg: float
    setup_avg: float
    teardown_avg: float
    allowed_diameters: tuple[int, ...] | None = None
    array_size: int = 1

    def __post_init__(self):
        if self.n_a < 1:
            raise ValueError(f"{self.mission_id}: n_a must be >= 1")
        if self.d_min_avg > self.d_max_avg:
            raise ValueError(f"{self.mission_id}: d_min_avg exceeds d_max_avg")


# Mission, T_R (h), n_a, d_min (h), d_max (h), setup (min), teardown (min)
W44_2016_TABLE = (
    ("ACE", 27.5, 10, 2.75, 2.75, 60, 15),
    ("CAS", 72.0, 8, 7.2, 9, 60, 15),
    ("CHDR", 21, 21, 1, 1, 60, 15),
    ("DAWN", 168, 21, 6.4, 8, 60, 15),
    ("DSCO", 1, 1, 1, 1, 60, 15),
    ("GTL", 23.1, 21, 1.1, 1.1, 30, 15),
    ("HYB2", 6, 2, 3, 3, 60, 15),
    ("JNO", 128, 18, 5.95, 7.11, 63.33, 16.67),
    ("KEPL", 12, 2, 6, 6, 60, 15),
    ("LRO", 13, 13, 1, 1, 60, 15),
    ("M01O", 113, 15, 6.04, 7.53, 60, 15),
    ("MER1", 17.5, 7, 2.5, 2.5, 45, 15),
    ("MEX", 56, 7, 6.4, 8, 60, 15),
    ("MMS1", 51.2, 13, 3.94, 3.94, 60, 15),
    ("MOM", 25.5, 8, 3.19, 3.19, 46.88, 15),
    ("MRO", 112, 14, 6.4, 8, 60, 15),
    ("MSL", 42, 7, 6, 6, 60, 15),
    ("MVN", 72, 9, 6.4, 8, 60, 15),
    ("NHPC", 70, 7, 8, 10, 60, 15),
    ("ORX", 45, 10, 4.5, 4.5, 60, 15),
    ("SOHO", 84, 21, 4, 4, 60, 15),
    ("STA", 28, 7, 4, 4, 60, 15),
    ("STB", 15.5, 3, 5, 5.17, 45, 15),
    ("STF", 20, 5, 4, 4, 60, 15),
    ("THB", 14, 4, 3.5, 3.5, 60, 15),
    ("THC", 14, 4, 3.5, 3.5, 60, 15),
    ("VGR1", 65, 8, 6.67, 8.13, 46.88, 15),
    ("VGR2", 84.5, 11, 6.41, 7.68, 35.45, 15),
    ("WIND", 17.5, 7, 2.5, 2.5, 60, 15),
)

# Missions that only 70-m dishes can serve in the reference week.
SEVENTY_METER_ONLY = {"NHPC"}

# Dataset: (# resources, requested n_a, T_R hours, # missions)
WEEK_TOTALS = {
    "W44-2016": (14, 284, 1418, 29),
    "W10-2018": (12, 257, 1192, 30),
    "W20-2018": (12, 294, 1406, 33),
    "W30-2018": (12, 293, 1464, 32),
    "W40-2018": (12, 333, 1737, 33),
    "W50-2018": (12, 275, 1292, 29),
}

# id, complex, diameter (m)
DSN_2016_ANTENNAS = (
    ("DSS-14", "Goldstone", 70),
    ("DSS-15", "Goldstone", 34),
    ("DSS-24", "Goldstone", 34),
    ("DSS-25", "Goldstone", 34),
    ("DSS-26", "Goldstone", 34),
    ("DSS-34", "Canberra", 34),
    ("DSS-35", "Canberra", 34),
    ("DSS-36", "Canberra", 34),
    ("DSS-43", "Canberra", 70),
    ("DSS-45", "Canberra", 34),
    ("DSS-54", "Madrid", 34),
    ("DSS-55", "Madrid", 34),
    ("DSS-63", "Madrid", 70),
    ("DSS-65", "Madrid", 34),
)
RETIRED_BY_2018 = {"DSS-15", "DSS-45"}

# UTC hour at which a spacecraft with zero phase transits each complex.
COMPLEX_TRANSIT_OFFSET_H = {"Goldstone": 8, "Madrid": 0, "Canberra": 14}

# View periods per antenna per day (Mon..Sun). Zero marks a day the antenna
# is down; DSS-45 is shut for the whole week and DSS-34 for part of it.
W44_2016_AVAILABILITY = {
    "DSS-14": (2, 2, 2, 2, 2, 2, 2),
    "DSS-15": (1, 1, 0, 1, 1, 1, 1),
    "DSS-24": (2, 1, 2, 1, 2, 1, 2),
    "DSS-25": (1, 1, 1, 2, 1, 1, 1),
    "DSS-26": (1, 2, 1, 1, 1, 2, 1),
    "DSS-34": (0, 0, 0, 1, 1, 1, 1),
    "DSS-35": (2, 1, 1, 1, 2, 1, 1),
    "DSS-36": (1, 1, 2, 1, 1, 1, 2),
    "DSS-43": (2, 2, 2, 2, 2, 2, 2),
    "DSS-45": (0, 0, 0, 0, 0, 0, 0),
    "DSS-54": (1, 2, 1, 1, 1, 2, 1),
    "DSS-55": (1, 1, 2, 1, 2, 1, 1),
    "DSS-63": (2, 2, 2, 2, 2, 2, 2),
    "DSS-65": (1, 1, 1, 2, 1, 1, 1),
}


def w44_2016_profiles() -> list[MissionProfile]:
    return [
        MissionProfile(
            mission_id=row[0], T_R=row[1], n_a=row[2], d_min_avg=row[3], d_max_avg=row[4],
            setup_avg=row[5], teardown_avg=row[6],
            allowed_diameters=(70,) if row[0] in SEVENTY_METER_ONLY else None,
        )
        for row in W44_2016_TABLE
    ]


def dsn_resources(year: int = 2016) -> list[Resource]:
    return [
        Resource(id=rid, complex=cplx, diameter_m=diam)
        for rid, cplx, diam in DSN_2016_ANTENNAS
        if year < 2018 or rid not in RETIRED_BY_2018
    ]


def uniform_availability(resources, per_day: int) -> dict[str, tuple[int, ...]]:
    return {r.id: (per_day,) * 7 for r in resources}


def desk_profiles() -> list[MissionProfile]:
    """Five missions, twenty requests: a small week that still oversubscribes three antennas."""
    return [
        MissionProfile("ALPHA", 40, 4, 8, 10, 60, 15),
        MissionProfile("BRAVO", 24, 6, 3, 4, 45, 15),
        MissionProfile("CHARLIE", 15, 3, 4, 5, 60, 15),
        MissionProfile("DELTA", 12, 4, 2, 3, 30, 15),
        MissionProfile("ECHO", 6, 3, 2, 2, 60, 15),
    ]


def desk_resources() -> list[Resource]:
    return [
        Resource("DSS-14", "Goldstone", 70),
        Resource("DSS-43", "Canberra", 70),
        Resource("DSS-63", "Madrid", 70),
    ]


def desk_availability() -> dict[str, tuple[int, ...]]:
    return {
        "DSS-14": (2, 2, 2, 2, 2, 2, 2),
        "DSS-43": (2, 2, 2, 0, 2, 2, 2),
        "DSS-63": (2, 2, 2, 2, 2, 2, 2),
    }


def profiles_from_totals(n_activities: int, requested_hours: float, n_missions: int) -> list[MissionProfile]:
    """Spread week-level totals evenly over anonymous missions.

    Used for weeks whose per-mission breakdown is not published. Request
    lengths are whole quarter-hours so every week quantizes on a 15-min grid.
    """
    if n_missions < 1 or n_activities < n_missions:
        raise ValueError("need at least one activity per mission")
    quarter_hours = round(requested_hours * 4)
    profiles = []
    for i in range(n_missions):
        n_a = n_activities // n_missions + (1 if i < n_activities % n_missions else 0)
        q = quarter_hours // n_missions + (1 if i < quarter_hours % n_missions else 0)
        T_R = q / 4
        d_max = T_R / n_a
        profiles.append(
            MissionProfile(f"M{i + 1:02d}", T_R, n_a, round(0.8 * d_max, 4), d_max, 60, 15)
        )
    return profiles
