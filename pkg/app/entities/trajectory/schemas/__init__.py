from .trajectory_schemas import PiPath, PiecewiseCubicTrajectory, JointTrajectory, TrajectoryConfig

__all__ = ["PiPath", "PiecewiseCubicTrajectory", "JointTrajectory", "TrajectoryConfig"]
