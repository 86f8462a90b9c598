use bp_core::instance::random_instance;
use bp_core::io::write_instance_json;

use crate::args::GenerateArgs;
use crate::error::Result;

pub fn run(args: &GenerateArgs) -> Result<()> {
    let inst = random_instance(args.m, args.n, args.density, args.seed)?;
    write_instance_json(&inst, &args.output)?;
    Ok(())
}
