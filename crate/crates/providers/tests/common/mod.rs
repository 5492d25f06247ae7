#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use majutsu_core::geometry::{compute_obb, OrientedBox};
use majutsu_core::layout::{BuildingInstance, FootprintPolygon};
use majutsu_core::math::Vec2;
use serde_json::Value;

pub type Handler = dyn Fn(&str, &Value) -> (u16, Value) + Send + Sync;

/// Minimal HTTP/1.1 JSON server on a loopback port; one request per
/// connection.
pub struct Stub {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
}

pub fn serve(handler: Box<Handler>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).is_err() {
                continue;
            }
            let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).ok();
            let json: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
            let (status, reply) = handler(&path, &json);
            let text = reply.to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
        }
    });
    Stub { url, hits }
}

pub fn rect_instance(id: &str, cx: f64, cy: f64, w: f64, l: f64, yaw: f64, height: f64) -> BuildingInstance {
    let (s, c) = yaw.sin_cos();
    let corner = |x: f64, y: f64| Vec2::new(cx + c * x - s * y, cy + s * x + c * y);
    let outer = vec![
        corner(-w / 2.0, -l / 2.0),
        corner(w / 2.0, -l / 2.0),
        corner(w / 2.0, l / 2.0),
        corner(-w / 2.0, l / 2.0),
    ];
    let obb: OrientedBox = compute_obb(&outer).unwrap();
    BuildingInstance {
        id: id.to_string(),
        pixel_count: 1,
        pixels: Vec::new(),
        footprint: FootprintPolygon { outer, holes: Vec::new() },
        obb,
        target_height: height,
    }
}
