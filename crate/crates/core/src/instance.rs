//! Problem instances: customer locations, demands, fleet data, distances.
//!
//! Distances are Euclidean lengths rounded up to the next integer, so every
//! route cost is integral. The matrix is computed once at construction and
//! cross-checked against the file contents on load.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum InstanceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid instance field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at `{field}`: {message}")]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
}

/// Integer grid position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    pub x: i64,
    pub y: i64,
}

impl Point {
    pub fn new(x: i64, y: i64) -> Point {
        Point { x, y }
    }
}

/// Euclidean distance between two grid points, rounded up to an integer.
pub fn dist(a: Point, b: Point) -> i64 {
    let dx = (a.x - b.x) as i128;
    let dy = (a.y - b.y) as i128;
    let dd = (dx * dx + dy * dy) as u128;
    let root = dd.isqrt();
    let root = if root * root == dd { root } else { root + 1 };
    root as i64
}

/// A capacitated vehicle routing instance.
///
/// Customers are indexed `0..n`; the depot occupies index `n` of the distance
/// matrix. All invariants (positive demands within capacity, a consistent
/// distance matrix) are established at construction and hold for the lifetime
/// of the value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CvrpInstance {
    grid: u32,
    depot: Point,
    customers: Vec<(Point, u32)>,
    fleet_size: u32,
    capacity: u32,
    dist: Vec<Vec<i64>>,
    max_distance: i64,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    grid: u32,
    depot: (i64, i64),
    customers: Vec<(i64, i64, u32)>,
    fleet_size: u32,
    capacity: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distances: Option<Vec<Vec<i64>>>,
}

impl CvrpInstance {
    /// Builds an instance from explicit data, recomputing the distance matrix.
    pub fn new(
        depot: Point,
        customers: Vec<(Point, u32)>,
        fleet_size: u32,
        capacity: u32,
        grid: u32,
    ) -> Result<CvrpInstance, InstanceError> {
        if fleet_size == 0 {
            return Err(InstanceError::InvalidField {
                field: "fleet_size".into(),
                reason: "must be at least 1".into(),
            });
        }
        if capacity == 0 {
            return Err(InstanceError::InvalidField {
                field: "capacity".into(),
                reason: "must be at least 1".into(),
            });
        }
        for (u, &(_, demand)) in customers.iter().enumerate() {
            if demand == 0 {
                return Err(InstanceError::InvalidField {
                    field: format!("customers[{u}].demand"),
                    reason: "must be positive".into(),
                });
            }
            if demand > capacity {
                return Err(InstanceError::InvalidField {
                    field: format!("customers[{u}].demand"),
                    reason: format!("demand {demand} exceeds vehicle capacity {capacity}"),
                });
            }
        }

        let n = customers.len();
        let mut points: Vec<Point> = customers.iter().map(|&(p, _)| p).collect();
        points.push(depot);
        let mut matrix = vec![vec![0i64; n + 1]; n + 1];
        let mut max_distance = 0;
        for i in 0..=n {
            for j in 0..=n {
                let d = dist(points[i], points[j]);
                matrix[i][j] = d;
                max_distance = max_distance.max(d);
            }
        }

        Ok(CvrpInstance {
            grid,
            depot,
            customers,
            fleet_size,
            capacity,
            dist: matrix,
            max_distance,
        })
    }

    /// Samples an instance with uniform coordinates in `{0, ..., grid}^2`
    /// (bounds inclusive) and unit demands. A fixed seed reproduces the
    /// instance bit for bit.
    pub fn generate(
        seed: u64,
        n_customers: usize,
        fleet_size: u32,
        capacity: u32,
        grid: u32,
    ) -> Result<CvrpInstance, InstanceError> {
        if n_customers == 0 {
            return Err(InstanceError::InvalidParameter(
                "n_customers must be at least 1".into(),
            ));
        }
        if fleet_size == 0 {
            return Err(InstanceError::InvalidParameter(
                "fleet_size must be at least 1".into(),
            ));
        }
        if capacity == 0 {
            return Err(InstanceError::InvalidParameter(
                "capacity must be at least 1".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| -> Point {
            let x = rng.gen_range(0..=grid) as i64;
            let y = rng.gen_range(0..=grid) as i64;
            Point { x, y }
        };
        let customers: Vec<(Point, u32)> =
            (0..n_customers).map(|_| (point(&mut rng), 1)).collect();
        let depot = point(&mut rng);
        CvrpInstance::new(depot, customers, fleet_size, capacity, grid)
    }

    pub fn n_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn fleet_size(&self) -> u32 {
        self.fleet_size
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn grid(&self) -> u32 {
        self.grid
    }

    pub fn depot(&self) -> Point {
        self.depot
    }

    pub fn customer(&self, u: usize) -> Point {
        self.customers[u].0
    }

    pub fn demand(&self, u: usize) -> u32 {
        self.customers[u].1
    }

    /// Distance between customers `u` and `v`.
    pub fn distance(&self, u: usize, v: usize) -> i64 {
        self.dist[u][v]
    }

    /// Distance between customer `u` and the depot.
    pub fn depot_distance(&self, u: usize) -> i64 {
        self.dist[u][self.customers.len()]
    }

    /// Largest entry of the distance matrix.
    pub fn max_distance(&self) -> i64 {
        self.max_distance
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            grid: self.grid,
            depot: (self.depot.x, self.depot.y),
            customers: self
                .customers
                .iter()
                .map(|&(p, d)| (p.x, p.y, d))
                .collect(),
            fleet_size: self.fleet_size,
            capacity: self.capacity,
            distances: Some(self.dist.clone()),
        };
        serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<CvrpInstance, InstanceError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let file: InstanceFile =
            serde_path_to_error::deserialize(&mut de).map_err(|e| InstanceError::Parse {
                path: origin.to_path_buf(),
                field: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        let instance = CvrpInstance::new(
            Point::new(file.depot.0, file.depot.1),
            file.customers
                .iter()
                .map(|&(x, y, d)| (Point::new(x, y), d))
                .collect(),
            file.fleet_size,
            file.capacity,
            file.grid,
        )?;
        if let Some(stored) = file.distances {
            if stored != instance.dist {
                return Err(InstanceError::InvalidField {
                    field: "distances".into(),
                    reason: "stored matrix disagrees with distances recomputed from coordinates"
                        .into(),
                });
            }
        }
        Ok(instance)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), InstanceError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CvrpInstance, InstanceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        CvrpInstance::from_json(&text, path)
    }
}
