from .kinematics_schemas import DeltaParams, JointAngles, EefPose, JointLimits

__all__ = ["DeltaParams", "JointAngles", "EefPose", "JointLimits"]
