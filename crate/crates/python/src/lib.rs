//! Python bindings for `stegmetrics`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use ::stegmetrics::bitmeasures::{self as bm, FeatureVector, MeasureConfig, Word32, FEATURE_DIM};
use ::stegmetrics::classifier::{self as svm, Sample, SvmConfig};
use ::stegmetrics::detector::{self as det, CalibrationCurve, CurvePoint};
use ::stegmetrics::imageio::{self as io, ImagePlane, RgbImage};
use ::stegmetrics::stego::{self, EmbedOrder, StegoParams};
use ::stegmetrics::synth::{self, ByteClass, NaturalImageSpec};
use ::stegmetrics::wavelet::{self, Band};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An 8-bit grayscale or RGB image.
#[pyclass(name = "Image", module = "stegmetrics", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: io::Image,
}

#[pymethods]
impl PyImage {
    #[staticmethod]
    fn gray(width: usize, height: usize, pixels: &[u8]) -> PyResult<Self> {
        let plane = ImagePlane::new(width, height, pixels.to_vec()).map_err(value_err)?;
        Ok(Self {
            inner: io::Image::Gray(plane),
        })
    }

    /// RGB image from interleaved `r g b r g b ...` samples.
    #[staticmethod]
    fn rgb(width: usize, height: usize, interleaved: &[u8]) -> PyResult<Self> {
        let img = RgbImage::from_interleaved(width, height, interleaved).map_err(value_err)?;
        Ok(Self {
            inner: io::Image::Rgb(img),
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channel_count()
    }

    /// Raw samples of one channel in raster order.
    fn plane<'py>(&self, py: Python<'py>, channel: usize) -> PyResult<Bound<'py, PyBytes>> {
        let plane = self
            .inner
            .channels()
            .get(channel)
            .ok_or_else(|| value_err(format!("no channel {channel}")))?;
        Ok(PyBytes::new(py, plane.pixels()))
    }

    fn to_pnm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &io::write_pnm(&self.inner))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(width={}, height={}, channels={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.channel_count()
        )
    }
}

#[pyfunction]
fn read_pnm(data: &[u8]) -> PyResult<PyImage> {
    Ok(PyImage {
        inner: io::read_pnm(data).map_err(value_err)?,
    })
}

#[pyfunction]
fn mu1(word: u32) -> f64 {
    bm::mu1(Word32(word))
}

#[pyfunction]
fn mu2(word: u32) -> f64 {
    bm::mu2(Word32(word))
}

#[pyfunction]
fn mu3(word: u32) -> f64 {
    bm::mu3(Word32(word))
}

#[pyfunction]
fn mu4(word: u32) -> f64 {
    bm::mu4(Word32(word))
}

#[pyfunction]
fn mu5(word: u32) -> f64 {
    bm::mu5(Word32(word))
}

/// The nine measures of one window of exactly `4 * window_words` bytes.
#[pyfunction]
#[pyo3(signature = (window, window_words = 2000))]
fn feature_vector(window: &[u8], window_words: usize) -> PyResult<Vec<f64>> {
    let cfg = MeasureConfig::with_window_words(window_words);
    Ok(bm::feature_vector(window, &cfg).map_err(value_err)?.0.to_vec())
}

fn to_fv(v: &[f64]) -> PyResult<FeatureVector> {
    let arr: [f64; FEATURE_DIM] = v
        .try_into()
        .map_err(|_| value_err(format!("feature vectors have {FEATURE_DIM} entries, got {}", v.len())))?;
    Ok(FeatureVector(arr))
}

/// Trained one-vs-one classifier.
#[pyclass(name = "Model", module = "stegmetrics", frozen)]
struct PyModel {
    inner: svm::MulticlassModel,
}

#[pymethods]
impl PyModel {
    #[getter]
    fn labels(&self) -> Vec<i64> {
        self.inner.labels.clone()
    }

    fn predict(&self, features: Vec<f64>) -> PyResult<i64> {
        Ok(self.inner.predict_class(&to_fv(&features)?))
    }

    /// Returns `(row-normalised confusion matrix, accuracy)`.
    fn evaluate(&self, features: Vec<Vec<f64>>, labels: Vec<i64>) -> PyResult<(Vec<Vec<f64>>, f64)> {
        let samples = samples_of(&features, &labels)?;
        let eval = svm::evaluate(&self.inner, &samples).map_err(value_err)?;
        Ok((eval.matrix.rates, eval.accuracy))
    }

    fn save(&self) -> String {
        svm::save_model(&self.inner)
    }

    #[staticmethod]
    fn load(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: svm::load_model(text).map_err(value_err)?,
        })
    }
}

fn samples_of(features: &[Vec<f64>], labels: &[i64]) -> PyResult<Vec<Sample>> {
    if features.len() != labels.len() {
        return Err(value_err("features and labels differ in length"));
    }
    features
        .iter()
        .zip(labels)
        .map(|(f, &l)| Ok(Sample::new(to_fv(f)?, l)))
        .collect()
}

#[pyfunction]
#[pyo3(signature = (features, labels, gamma = 1.0 / 9.0, c = 10.0, seed = 0))]
fn train(py: Python<'_>, features: Vec<Vec<f64>>, labels: Vec<i64>, gamma: f64, c: f64, seed: u64) -> PyResult<PyModel> {
    let samples = samples_of(&features, &labels)?;
    let config = SvmConfig {
        gamma,
        c,
        seed,
        ..SvmConfig::default()
    };
    let inner = py.detach(|| svm::train_multiclass(&samples, &config)).map_err(value_err)?;
    Ok(PyModel { inner })
}

#[pyfunction]
#[pyo3(signature = (image, level, seed, order = "randomized"))]
fn embed(image: &PyImage, level: f64, seed: u64, order: &str) -> PyResult<PyImage> {
    let order: EmbedOrder = order.parse().map_err(value_err)?;
    let params = StegoParams::with_order(level, seed, order).map_err(value_err)?;
    Ok(PyImage {
        inner: stego::embed_lsb(&image.inner, &params),
    })
}

/// Packed LSB plane, first sample in the MSB of the first byte.
#[pyfunction]
fn extract_lsb<'py>(py: Python<'py>, image: &PyImage) -> Bound<'py, PyBytes> {
    PyBytes::new(py, &stego::extract_lsb_plane(&image.inner).to_bytes())
}

/// One second-level sub-band of a channel as `(rows, cols, values)`.
#[pyfunction]
#[pyo3(signature = (image, channel = 0, band = "ll"))]
fn subband(image: &PyImage, channel: usize, band: &str) -> PyResult<(usize, usize, Vec<f64>)> {
    let band: Band = band.parse().map_err(value_err)?;
    let plane = image
        .inner
        .channels()
        .get(channel)
        .ok_or_else(|| value_err(format!("no channel {channel}")))?;
    let sb = wavelet::second_level_subbands(plane).map_err(value_err)?;
    Ok((sb.height, sb.width, sb.band(band).to_vec()))
}

/// `(p', p'')` after a start embedding at `k` and a forced one at `i`.
#[pyfunction]
fn p_prime_chain(p: f64, k: f64, i: f64) -> PyResult<(f64, f64)> {
    det::p_prime_chain(p, k, i).map_err(value_err)
}

#[pyfunction]
fn analytic_pr(i: f64, p_prime: f64) -> PyResult<f64> {
    det::analytic_pr(i, p_prime).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (i, p_prime, channels = 3, width = 800, height = 600))]
fn expected_eta(i: f64, p_prime: f64, channels: usize, width: usize, height: usize) -> PyResult<f64> {
    det::expected_eta(i, p_prime, channels, width, height).map_err(value_err)
}

/// `(i, eta, gamma_db)` for each forced level.
#[pyfunction]
fn forced_embedding_curve(
    py: Python<'_>,
    image: &PyImage,
    i_levels: Vec<f64>,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let img = image.inner.clone();
    let readings = py
        .detach(|| det::forced_embedding_curve(&img, &i_levels, seed))
        .map_err(value_err)?;
    Ok(readings.iter().map(|r| (r.i, r.eta, r.gamma_db)).collect())
}

/// Mean curve as `(k, mean_eta, mean_gamma_db)` points.
#[pyfunction]
#[pyo3(signature = (images, k_grid, i_fixed = 0.2, seed = 1, repeats = det::DEFAULT_REPEATS))]
fn calibrate(
    py: Python<'_>,
    images: Vec<PyRef<'_, PyImage>>,
    k_grid: Vec<f64>,
    i_fixed: f64,
    seed: u64,
    repeats: usize,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let imgs: Vec<io::Image> = images.iter().map(|i| i.inner.clone()).collect();
    let curve = py
        .detach(|| det::calibrate(&imgs, &k_grid, i_fixed, seed, repeats))
        .map_err(value_err)?;
    Ok(curve.points.iter().map(|p| (p.k, p.mean_eta, p.mean_gamma_db)).collect())
}

/// Inverts a curve from [`calibrate`] at the level of `image`.
#[pyfunction]
#[pyo3(signature = (image, curve, i_fixed = 0.2, seed = 1, repeats = det::DEFAULT_REPEATS))]
fn estimate_k(
    py: Python<'_>,
    image: &PyImage,
    curve: Vec<(f64, f64, f64)>,
    i_fixed: f64,
    seed: u64,
    repeats: usize,
) -> PyResult<f64> {
    let points = curve
        .into_iter()
        .map(|(k, mean_eta, mean_gamma_db)| CurvePoint {
            k,
            mean_eta,
            mean_gamma_db,
        })
        .collect();
    let curve = CalibrationCurve::new(i_fixed, points, None).map_err(value_err)?;
    let img = image.inner.clone();
    py.detach(|| det::estimate_k(&img, &curve, seed, repeats)).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (width, height, even_probability, seed, channels = 3))]
fn natural_image(width: usize, height: usize, even_probability: f64, seed: u64, channels: usize) -> PyResult<PyImage> {
    let spec = NaturalImageSpec {
        channels,
        ..NaturalImageSpec::rgb(width, height, even_probability)
    };
    Ok(PyImage {
        inner: synth::natural_image(&spec, seed).map_err(value_err)?,
    })
}

/// Synthetic bytes of a named family (`text`, `code`, `random`, ...).
#[pyfunction]
fn byte_stream<'py>(py: Python<'py>, class: &str, len: usize, seed: u64) -> PyResult<Bound<'py, PyBytes>> {
    let class = ByteClass::ALL
        .into_iter()
        .find(|c| c.name() == class)
        .ok_or_else(|| value_err(format!("unknown byte class {class:?}")))?;
    Ok(PyBytes::new(py, &synth::generate_bytes(class, len, seed)))
}

#[pymodule]
#[pyo3(name = "stegmetrics")]
fn stegmetrics_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(read_pnm, m)?)?;
    m.add_function(wrap_pyfunction!(mu1, m)?)?;
    m.add_function(wrap_pyfunction!(mu2, m)?)?;
    m.add_function(wrap_pyfunction!(mu3, m)?)?;
    m.add_function(wrap_pyfunction!(mu4, m)?)?;
    m.add_function(wrap_pyfunction!(mu5, m)?)?;
    m.add_function(wrap_pyfunction!(feature_vector, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(embed, m)?)?;
    m.add_function(wrap_pyfunction!(extract_lsb, m)?)?;
    m.add_function(wrap_pyfunction!(subband, m)?)?;
    m.add_function(wrap_pyfunction!(p_prime_chain, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_pr, m)?)?;
    m.add_function(wrap_pyfunction!(expected_eta, m)?)?;
    m.add_function(wrap_pyfunction!(forced_embedding_curve, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_k, m)?)?;
    m.add_function(wrap_pyfunction!(natural_image, m)?)?;
    m.add_function(wrap_pyfunction!(byte_stream, m)?)?;
    m.add("FEATURE_DIM", FEATURE_DIM)?;
    Ok(())
}
