//! Deterministic GeoJSON persistence for vector scenes.
//!
//! One FeatureCollection per scene; one Polygon feature per component with
//! integer pixel coordinates (y down, declared by the collection property
//! `coordinate_convention`). Serialization uses fixed key order and
//! compact separators, so equal scenes always produce identical bytes.
//! Deserialization validates shape strictly and reports the JSON-pointer
//! style path of the first offending element.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::contour::{Point, Polygon};
use crate::pipeline::VectorScene;
use crate::threshold::ThresholdLevel;

pub const COORDINATE_CONVENTION: &str = "pixel-y-down";

#[derive(Debug, Error)]
pub enum GeoJsonError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at {path}: {detail}")]
    SchemaViolation { path: String, detail: String },
}

fn violation(path: impl Into<String>, detail: impl Into<String>) -> GeoJsonError {
    GeoJsonError::SchemaViolation { path: path.into(), detail: detail.into() }
}

#[derive(Serialize)]
struct CollectionDoc<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    features: Vec<FeatureDoc>,
    properties: CollectionProps<'a>,
}

#[derive(Serialize)]
struct CollectionProps<'a> {
    width: u32,
    height: u32,
    threshold_used: u8,
    source_name: &'a str,
    coordinate_convention: &'static str,
}

#[derive(Serialize)]
struct FeatureDoc {
    #[serde(rename = "type")]
    kind: &'static str,
    properties: FeatureProps,
    geometry: GeometryDoc,
}

#[derive(Serialize)]
struct FeatureProps {
    component_id: u32,
    area_px: u64,
}

#[derive(Serialize)]
struct GeometryDoc {
    #[serde(rename = "type")]
    kind: &'static str,
    coordinates: Vec<Vec<[u32; 2]>>,
}

/// Serialize a scene. The polygon ring is written explicitly closed (first
/// point repeated last).
pub fn to_geojson(scene: &VectorScene) -> String {
    let features = scene
        .polygons
        .iter()
        .map(|poly| {
            let mut ring: Vec<[u32; 2]> = poly.points.iter().map(|p| [p.x, p.y]).collect();
            if let Some(&first) = ring.first() {
                ring.push(first);
            }
            FeatureDoc {
                kind: "Feature",
                properties: FeatureProps {
                    component_id: poly.component_id,
                    area_px: poly.area_px as u64,
                },
                geometry: GeometryDoc { kind: "Polygon", coordinates: vec![ring] },
            }
        })
        .collect();
    let doc = CollectionDoc {
        kind: "FeatureCollection",
        features,
        properties: CollectionProps {
            width: scene.width,
            height: scene.height,
            threshold_used: scene.threshold_used.level,
            source_name: &scene.source_name,
            coordinate_convention: COORDINATE_CONVENTION,
        },
    };
    serde_json::to_string(&doc).expect("scene serialization cannot fail")
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, GeoJsonError> {
    v.as_object().ok_or_else(|| violation(path, "expected an object"))
}

fn member<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    path: &str,
) -> Result<&'a Value, GeoJsonError> {
    obj.get(key).ok_or_else(|| violation(format!("{path}/{key}"), "missing member"))
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str, GeoJsonError> {
    v.as_str().ok_or_else(|| violation(path, "expected a string"))
}

fn as_u64(v: &Value, path: &str) -> Result<u64, GeoJsonError> {
    v.as_u64().ok_or_else(|| violation(path, "expected a non-negative integer"))
}

fn expect_kind(obj: &Map<String, Value>, want: &str, path: &str) -> Result<(), GeoJsonError> {
    let kind_path = format!("{path}/type");
    let kind = as_str(member(obj, "type", path)?, &kind_path)?;
    if kind != want {
        return Err(violation(kind_path, format!("expected \"{want}\", got \"{kind}\"")));
    }
    Ok(())
}

/// Parse text produced by [`to_geojson`] (or anything schema-equivalent)
/// back into a scene.
pub fn from_geojson(text: &str) -> Result<VectorScene, GeoJsonError> {
    let root: Value = serde_json::from_str(text)?;
    let root_obj = as_object(&root, "")?;
    expect_kind(root_obj, "FeatureCollection", "")?;

    let props = as_object(member(root_obj, "properties", "")?, "/properties")?;
    let width64 = as_u64(member(props, "width", "/properties")?, "/properties/width")?;
    let height64 = as_u64(member(props, "height", "/properties")?, "/properties/height")?;
    if width64 == 0 || width64 > u32::MAX as u64 {
        return Err(violation("/properties/width", "width must be in 1..=u32::MAX"));
    }
    if height64 == 0 || height64 > u32::MAX as u64 {
        return Err(violation("/properties/height", "height must be in 1..=u32::MAX"));
    }
    let (width, height) = (width64 as u32, height64 as u32);
    let threshold = as_u64(
        member(props, "threshold_used", "/properties")?,
        "/properties/threshold_used",
    )?;
    if threshold > 255 {
        return Err(violation("/properties/threshold_used", "threshold must be in 0..=255"));
    }
    let source_name = as_str(
        member(props, "source_name", "/properties")?,
        "/properties/source_name",
    )?
    .to_string();
    let convention_path = "/properties/coordinate_convention";
    let convention = as_str(member(props, "coordinate_convention", "/properties")?, convention_path)?;
    if convention != COORDINATE_CONVENTION {
        return Err(violation(
            convention_path,
            format!("expected \"{COORDINATE_CONVENTION}\", got \"{convention}\""),
        ));
    }

    let features = member(root_obj, "features", "")?
        .as_array()
        .ok_or_else(|| violation("/features", "expected an array"))?;
    let mut polygons = Vec::with_capacity(features.len());
    for (i, feature) in features.iter().enumerate() {
        let fpath = format!("/features/{i}");
        let fobj = as_object(feature, &fpath)?;
        expect_kind(fobj, "Feature", &fpath)?;

        let ppath = format!("{fpath}/properties");
        let fprops = as_object(member(fobj, "properties", &fpath)?, &ppath)?;
        let component_id = as_u64(
            member(fprops, "component_id", &ppath)?,
            &format!("{ppath}/component_id"),
        )?;
        if component_id == 0 || component_id > u32::MAX as u64 {
            return Err(violation(
                format!("{ppath}/component_id"),
                "component_id must be in 1..=u32::MAX",
            ));
        }
        let area_px = as_u64(member(fprops, "area_px", &ppath)?, &format!("{ppath}/area_px"))?;

        let gpath = format!("{fpath}/geometry");
        let geom = as_object(member(fobj, "geometry", &fpath)?, &gpath)?;
        expect_kind(geom, "Polygon", &gpath)?;
        let rings = member(geom, "coordinates", &gpath)?
            .as_array()
            .ok_or_else(|| violation(format!("{gpath}/coordinates"), "expected an array"))?;
        if rings.len() != 1 {
            return Err(violation(
                format!("{gpath}/coordinates"),
                format!("outer ring only: expected exactly 1 ring, got {}", rings.len()),
            ));
        }
        let rpath = format!("{gpath}/coordinates/0");
        let ring = rings[0]
            .as_array()
            .ok_or_else(|| violation(&rpath, "expected an array of positions"))?;
        if ring.len() < 2 {
            return Err(violation(&rpath, "closed ring needs at least 2 positions"));
        }
        let mut points = Vec::with_capacity(ring.len() - 1);
        for (j, pos) in ring.iter().enumerate() {
            let pos_path = format!("{rpath}/{j}");
            let pair = pos
                .as_array()
                .ok_or_else(|| violation(&pos_path, "expected an [x,y] position"))?;
            if pair.len() != 2 {
                return Err(violation(&pos_path, "position must have exactly 2 elements"));
            }
            let x = as_u64(&pair[0], &format!("{pos_path}/0"))?;
            let y = as_u64(&pair[1], &format!("{pos_path}/1"))?;
            if x >= width as u64 || y >= height as u64 {
                return Err(violation(&pos_path, "coordinate outside image bounds"));
            }
            points.push(Point { x: x as u32, y: y as u32 });
        }
        if points.first() != points.last() {
            return Err(violation(&rpath, "ring is not closed (first position != last)"));
        }
        points.pop();
        polygons.push(Polygon {
            points,
            component_id: component_id as u32,
            area_px: area_px as usize,
        });
    }

    // Scene invariant: component ids are exactly 1..=K in feature order.
    for (i, poly) in polygons.iter().enumerate() {
        if poly.component_id != i as u32 + 1 {
            return Err(violation(
                format!("/features/{i}/properties/component_id"),
                format!("component ids must be dense 1..=K, expected {}", i + 1),
            ));
        }
    }

    Ok(VectorScene {
        width,
        height,
        polygons,
        threshold_used: ThresholdLevel { level: threshold as u8 },
        source_name,
    })
}
