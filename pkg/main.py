"""
Root module. Runs one toolkit command, e.g.
``$ python main.py --config configs/acceptance.cfg --seed 20240501 --threads 4``.
"""

from wetsim.cli import main

if __name__ == "__main__":
    main()
