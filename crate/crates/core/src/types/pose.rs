use super::geometry::{Mat3, Quat, Vec3};

/// Rigid transform `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidPose {
    pub rotation: Quat,
    pub translation: Vec3,
}

impl RigidPose {
    pub const IDENTITY: RigidPose = RigidPose { rotation: Quat::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: Quat, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Self::new(Quat::IDENTITY, t)
    }

    pub fn from_rotation(q: Quat) -> Self {
        Self::new(q, Vec3::ZERO)
    }

    /// Camera-to-vehicle pose for a camera at `position` looking along the
    /// vehicle-frame heading `yaw` (0 = forward), with the image x-axis
    /// pointing right and y down.
    pub fn camera_mount(position: Vec3, yaw: f64) -> Self {
        // camera +z -> vehicle +x, camera +x -> vehicle -y, camera +y -> vehicle -z
        let forward = Mat3::from_columns(-Vec3::Y, -Vec3::Z, Vec3::X);
        let mount = Quat::from_rotation_matrix(&forward);
        Self::new(Quat::from_yaw(yaw).mul(&mount), position)
    }

    /// `self ∘ other`: applying the result equals applying `other`, then `self`.
    pub fn compose(&self, other: &RigidPose) -> RigidPose {
        RigidPose {
            rotation: self.rotation.mul(&other.rotation),
            translation: self.rotation.rotate(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidPose {
        let inv = self.rotation.conjugate();
        RigidPose { rotation: inv, translation: -inv.rotate(self.translation) }
    }

    pub fn transform_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) + self.translation
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }

    /// Pose of `self` expressed relative to `reference`.
    pub fn relative_to(&self, reference: &RigidPose) -> RigidPose {
        reference.inverse().compose(self)
    }

    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let r = self.rotation.to_matrix().0;
        let t = self.translation;
        [
            [r[0][0], r[0][1], r[0][2], t.x],
            [r[1][0], r[1][1], r[1][2], t.y],
            [r[2][0], r[2][1], r[2][2], t.z],
            [0.0, 0.0, 0.0, 1.0],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite() && self.rotation.wxyz().iter().all(|c| c.is_finite())
    }
}
