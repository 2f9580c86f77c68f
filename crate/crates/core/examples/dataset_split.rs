//! Parsing interaction logs, core filtering and the leave-last-out split.

use embkernel::data::{parse_interactions, read_dataset_cache, write_dataset_cache, InteractionDataset};

const LOG: &str = "user_id,item_id,timestamp
u1,apple,3
u1,pear,1
u1,plum,2
u1,fig,4
u2,pear,1
u2,apple,2
u2,fig,3
u3,plum,5
u3,kiwi,1
";

fn main() -> embkernel::Result<()> {
    let records = parse_interactions(LOG.as_bytes())?;
    println!("{} interactions parsed", records.len());

    // min_count = 2 drops kiwi, which leaves u3 with one interaction;
    // dropping u3 in turn leaves plum with one
    let data = InteractionDataset::from_interactions(&records, 2)?;
    println!("{} users and {} items survive filtering", data.num_users(), data.num_items());
    for u in 0..data.num_users() {
        let names = |xs: &[u32]| xs.iter().map(|&i| data.item_ids()[i as usize].as_str()).collect::<Vec<_>>();
        println!(
            "{}: train {:?}, valid {}, test {}",
            data.user_ids()[u],
            names(data.train(u)),
            data.item_ids()[data.valid(u) as usize],
            data.item_ids()[data.test(u) as usize]
        );
    }

    let mut cache = Vec::new();
    write_dataset_cache(&data, &mut cache)?;
    assert_eq!(read_dataset_cache(cache.as_slice())?, data);
    println!("binary cache: {} bytes", cache.len());
    Ok(())
}
