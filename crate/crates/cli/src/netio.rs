//! CSV forms of nets, edges and maps.
//!
//! | File | Header |
//! |------|--------|
//! | points | `id,kind,c0,…,c{k−1},weight` (short coordinate lists leave trailing cells empty) |
//! | edges | `src,dst,length` |
//! | map | `domain_id,codomain_id` |

use qi_core::spaces::{Edge, Net, Point};
use std::io::{Read, Write};

pub type CsvResult<T> = Result<T, Box<dyn std::error::Error + Send + Sync>>;

pub fn write_points<W: Write>(net: &Net, out: W) -> CsvResult<()> {
    let width = net.points.iter().map(|p| p.coords().len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "kind".to_string()];
    header.extend((0..width).map(|k| format!("c{k}")));
    header.push("weight".into());
    w.write_record(&header)?;
    for (i, (p, m)) in net.points.iter().zip(&net.measure).enumerate() {
        let coords = p.coords();
        let mut row = vec![i.to_string(), p.kind_label().to_string()];
        row.extend((0..width).map(|k| coords.get(k).map(|c| c.to_string()).unwrap_or_default()));
        row.push(m.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(input: R) -> CsvResult<(Vec<Point>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut points = Vec::new();
    let mut measure = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(format!("points row {}: too few cells", line + 1).into());
        }
        let id: usize = rec[0].parse()?;
        if id != points.len() {
            return Err(format!("points row {}: ids must be 0, 1, 2, … in order", line + 1).into());
        }
        let coords = rec
            .iter()
            .skip(2)
            .take(rec.len() - 3)
            .filter(|c| !c.is_empty())
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()?;
        points.push(Point::from_coords(&rec[1], &coords)?);
        measure.push(rec[rec.len() - 1].parse()?);
    }
    Ok((points, measure))
}

pub fn write_edges<W: Write>(edges: &[Edge], out: W) -> CsvResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "length"])?;
    for e in edges {
        w.write_record([e.src.to_string(), e.dst.to_string(), e.len.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_edges<R: Read>(input: R) -> CsvResult<Vec<Edge>> {
    let mut r = csv::Reader::from_reader(input);
    r.records().map(|rec| {
        let rec = rec?;
        Ok(Edge { src: rec[0].parse()?, dst: rec[1].parse()?, len: rec[2].parse()? })
    })
    .collect()
}

pub fn write_map<W: Write>(assignment: &[usize], out: W) -> CsvResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["domain_id", "codomain_id"])?;
    for (i, j) in assignment.iter().enumerate() {
        w.write_record([i.to_string(), j.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_map<R: Read>(input: R) -> CsvResult<Vec<usize>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let i: usize = rec[0].parse()?;
        if i != out.len() {
            return Err("map rows must list domain ids 0, 1, 2, … in order".into());
        }
        out.push(rec[1].parse()?);
    }
    Ok(out)
}

pub fn write_table<W: Write>(header: &[String], rows: &[Vec<String>], out: W) -> CsvResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qi_core::spaces::{build_tree_ball, Visual};

    #[test]
    fn tree_points_round_trip() {
        let net = build_tree_ball(3, 2).unwrap();
        let mut buf = Vec::new();
        write_points(&net, &mut buf).unwrap();
        let (points, measure) = read_points(buf.as_slice()).unwrap();
        assert_eq!(points, net.points);
        let back = Net::from_points(points, measure, vec![], None, Visual::Standard).unwrap();
        assert_eq!(back.distance(1, 9), net.distance(1, 9));
    }

    #[test]
    fn edges_and_maps_round_trip() {
        let edges = vec![Edge { src: 0, dst: 1, len: 0.5 }];
        let mut buf = Vec::new();
        write_edges(&edges, &mut buf).unwrap();
        assert_eq!(read_edges(buf.as_slice()).unwrap(), edges);
        let mut buf = Vec::new();
        write_map(&[2, 0, 1], &mut buf).unwrap();
        assert_eq!(read_map(buf.as_slice()).unwrap(), vec![2, 0, 1]);
    }
}
