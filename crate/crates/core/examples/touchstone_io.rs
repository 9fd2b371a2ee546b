//! Parse a Touchstone file, inspect it and write it back in other formats.
//!
//!     cargo run --example touchstone_io

use pdnprint::touchstone::{extract_s11, parse_touchstone, write_touchstone, DataFormat};

const SAMPLE: &str = "\
! bench capture, OSL at the SMA
# MHz S MA R 50
1    0.981  -3.2
10   0.874  -31.5
100  0.402  -88.0
1000 0.655  120.4
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = parse_touchstone(SAMPLE.as_bytes())?;
    println!(
        "{} port(s), {} points, {:?}, z0 = {} ohm",
        net.ports(),
        net.grid().len(),
        net.options.format,
        net.options.reference
    );
    println!("comments: {:?}", net.comments);

    let s11 = extract_s11(&net)?;
    println!("S11 at {} Hz = {}", s11.grid().points()[2], s11.values()[2]);

    for fmt in [DataFormat::Ri, DataFormat::Db] {
        println!("--- as {fmt:?}");
        print!("{}", String::from_utf8(write_touchstone(&net, fmt))?);
    }

    // Errors carry the line number.
    let broken = "# Hz S RI R 50\n1e6 0.1\n";
    if let Err(e) = parse_touchstone(broken.as_bytes()) {
        println!("broken file: {e}");
    }
    Ok(())
}
