use std::io::Write;

use serde::Serialize;

use super::World;
use crate::Result;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TrajectoryRow {
    pub frame: u64,
    pub body: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
}

/// Accumulates body states frame by frame for CSV export.
#[derive(Debug, Default, Clone)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn record(&mut self, world: &World) {
        let frame = world.frame();
        self.rows.extend(world.bodies().iter().enumerate().map(|(body, b)| TrajectoryRow {
            frame,
            body,
            x: b.position.x,
            y: b.position.y,
            z: b.position.z,
            vx: b.velocity.x,
            vy: b.velocity.y,
            vz: b.velocity.z,
        }));
    }

    /// Writes `frame,body,x,y,z,vx,vy,vz` rows with a header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}
