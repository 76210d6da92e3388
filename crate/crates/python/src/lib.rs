//! Python bindings: scene loading, reward evaluation and observations.
//!
//! Sessions are immutable; every call returns fresh Python objects.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use interplay_core::retarget::{build_observation, ObservationSpec};
use interplay_core::reward::{FrameReward, FrameWindow, RewardModel, RewardParams};
use interplay_core::{motion, Error, RewardBreakdown, Scene as CoreScene};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::Numerical(_) | Error::Degenerate(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn breakdown(b: &RewardBreakdown) -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("err_pos_graph", b.err_pos_graph),
        ("err_vel_graph", b.err_vel_graph),
        ("err_root", b.err_root),
        ("err_com", b.err_com),
        ("r_pos_graph", b.r_pos_graph),
        ("r_vel_graph", b.r_vel_graph),
        ("r_root", b.r_root),
        ("r_com", b.r_com),
        ("r", b.r),
    ])
}

fn frame_records(fr: &FrameReward) -> Vec<BTreeMap<&'static str, f64>> {
    fr.characters.iter().map(breakdown).collect()
}

/// A loaded scene.
#[pyclass(frozen, skip_from_py_object, module = "interplay")]
#[derive(Clone)]
struct Scene {
    inner: CoreScene,
}

#[pymethods]
impl Scene {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Scene {
            inner: motion::scene_from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        motion::scene_to_json(&self.inner)
    }

    #[getter]
    fn fps(&self) -> f64 {
        self.inner.fps
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    #[getter]
    fn character_names(&self) -> Vec<String> {
        self.inner.characters.iter().map(|c| c.name.clone()).collect()
    }

    #[getter]
    fn object_names(&self) -> Vec<String> {
        self.inner.objects.iter().map(|o| o.name.clone()).collect()
    }

    /// Marker positions of `frame`, flattened `[x0, y0, z0, x1, ...]` in the
    /// scene's marker order.
    fn marker_positions(&self, frame: usize) -> PyResult<Vec<f64>> {
        if frame >= self.inner.frame_count() {
            return Err(PyValueError::new_err(format!(
                "frame {frame} is outside a clip of {} frames",
                self.inner.frame_count()
            )));
        }
        let ps = self.inner.marker_positions(frame).map_err(to_py)?;
        Ok(ps.iter().flat_map(|p| [p.x, p.y, p.z]).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scene(characters={:?}, objects={}, frames={}, fps={})",
            self.character_names(),
            self.inner.objects.len(),
            self.inner.frame_count(),
            self.inner.fps
        )
    }
}

#[pyfunction]
fn load_scene(path: &str) -> PyResult<Scene> {
    Ok(Scene {
        inner: motion::load_scene(path).map_err(to_py)?,
    })
}

/// A reference clip with cached connectivity and reward parameters.
///
/// `template` fixes the evaluated characters (skeletons and markers); it
/// defaults to the reference. `params` is the JSON of the reward parameters
/// and `observation` the JSON of an observation spec.
#[pyclass(frozen, module = "interplay")]
struct Session {
    reference: CoreScene,
    model: RewardModel,
    spec: ObservationSpec,
}

impl Session {
    fn check_scene(&self, scene: &CoreScene) -> PyResult<()> {
        if scene.frame_count() != self.reference.frame_count() {
            return Err(PyValueError::new_err(format!(
                "evaluated clip has {} frames, expected {}",
                scene.frame_count(),
                self.reference.frame_count()
            )));
        }
        Ok(())
    }
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (reference, template=None, params=None, observation=None))]
    fn new(
        reference: &Scene,
        template: Option<&Scene>,
        params: Option<&str>,
        observation: Option<&str>,
    ) -> PyResult<Self> {
        let params: RewardParams = match params {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| PyValueError::new_err(format!("reward params: {e}")))?,
            None => RewardParams::default(),
        };
        params.validate().map_err(to_py)?;
        let spec: ObservationSpec = match observation {
            Some(text) => serde_json::from_str(text)
                .map_err(|e| PyValueError::new_err(format!("observation spec: {e}")))?,
            None => ObservationSpec::default(),
        };
        let sim = template.map_or(&reference.inner, |t| &t.inner);
        let model = RewardModel::new(&reference.inner, sim, params).map_err(to_py)?;
        Ok(Session {
            reference: reference.inner.clone(),
            model,
            spec,
        })
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.reference.frame_count()
    }

    /// Reward parameters as JSON.
    #[getter]
    fn params(&self) -> String {
        serde_json::to_string(self.model.params()).expect("params serialize")
    }

    /// Per-character reward breakdowns of `scene` at `frame`.
    fn eval(&self, frame: usize, scene: &Scene) -> PyResult<Vec<BTreeMap<&'static str, f64>>> {
        self.check_scene(&scene.inner)?;
        if frame >= self.reference.frame_count() {
            return Err(PyValueError::new_err(format!(
                "frame {frame} is outside a clip of {} frames",
                self.reference.frame_count()
            )));
        }
        let fr = self
            .model
            .evaluate(frame, &FrameWindow::of_scene(&scene.inner, frame))
            .map_err(to_py)?;
        Ok(frame_records(&fr))
    }

    /// Breakdowns of every frame, in frame order.
    fn eval_all(&self, scene: &Scene) -> PyResult<Vec<Vec<BTreeMap<&'static str, f64>>>> {
        self.check_scene(&scene.inner)?;
        let rewards = self.model.evaluate_scene(&scene.inner).map_err(to_py)?;
        Ok(rewards.iter().map(frame_records).collect())
    }

    /// Flattened observation (`o_sim` then `o_ref`) of `scene` at `frame`.
    fn observation(&self, frame: usize, scene: &Scene) -> PyResult<Vec<f64>> {
        let o = build_observation(&scene.inner, &self.reference, frame, &self.spec).map_err(to_py)?;
        Ok(o.to_vec())
    }
}

#[pyfunction(name = "eval")]
fn eval_frame(session: &Session, frame: usize, scene: &Scene) -> PyResult<Vec<BTreeMap<&'static str, f64>>> {
    session.eval(frame, scene)
}

#[pyfunction]
fn observation(session: &Session, frame: usize, scene: &Scene) -> PyResult<Vec<f64>> {
    session.observation(frame, scene)
}

#[pymodule]
fn interplay(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", interplay_core::VERSION)?;
    m.add_class::<Scene>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(load_scene, m)?)?;
    m.add_function(wrap_pyfunction!(eval_frame, m)?)?;
    m.add_function(wrap_pyfunction!(observation, m)?)?;
    Ok(())
}
